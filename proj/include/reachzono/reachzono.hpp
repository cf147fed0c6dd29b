#ifndef REACHZONO_REACHZONO_HPP_
#define REACHZONO_REACHZONO_HPP_

#include "analysis.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "linprog.hpp"
#include "network.hpp"
#include "oracle.hpp"
#include "relu_reach.hpp"
#include "report.hpp"
#include "zonotope.hpp"

#endif
