#pragma once

#include "teid/error.hpp"
#include "teid/gaussian.hpp"
#include "teid/graph.hpp"
#include "teid/identification.hpp"
#include "teid/io.hpp"
#include "teid/models.hpp"
#include "teid/okuno.hpp"
#include "teid/oracle.hpp"
#include "teid/random.hpp"
#include "teid/sem.hpp"
