#pragma once

#include "fairfront/config.hpp"
#include "fairfront/error.hpp"
#include "fairfront/experiment.hpp"
#include "fairfront/moo.hpp"
#include "fairfront/numeric.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/population.hpp"
#include "fairfront/predictive.hpp"
#include "fairfront/projection.hpp"
#include "fairfront/service.hpp"
#include "fairfront/stakeholders.hpp"
#include "fairfront/sweep.hpp"
#include "fairfront/synthetic.hpp"
#include "fairfront/theory.hpp"
