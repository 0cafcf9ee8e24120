#pragma once

// Everything except the HTTP service, which pulls in the socket layer.

#include "goalrec/domain.hpp"
#include "goalrec/error.hpp"
#include "goalrec/solver.hpp"
#include "goalrec/planner.hpp"
#include "goalrec/data.hpp"
#include "goalrec/priors.hpp"
#include "goalrec/likelihoods.hpp"
#include "goalrec/recognizer.hpp"
#include "goalrec/experiment.hpp"
#include "goalrec/serialize.hpp"
