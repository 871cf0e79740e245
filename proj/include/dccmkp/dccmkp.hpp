#pragma once

#include "dccmkp/error.hpp"
#include "dccmkp/rng.hpp"
#include "dccmkp/instance.hpp"
#include "dccmkp/encoding.hpp"
#include "dccmkp/stochastic.hpp"
#include "dccmkp/objectives.hpp"
#include "dccmkp/dynamics.hpp"
#include "dccmkp/pareto.hpp"
#include "dccmkp/run_record.hpp"
#include "dccmkp/moea.hpp"
#include "dccmkp/oracle.hpp"
#include "dccmkp/evaluation.hpp"
#include "dccmkp/experiment.hpp"
