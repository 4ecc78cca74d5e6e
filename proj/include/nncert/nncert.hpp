#pragma once

#include "nncert/certify.hpp"
#include "nncert/dataset.hpp"
#include "nncert/error.hpp"
#include "nncert/features.hpp"
#include "nncert/io.hpp"
#include "nncert/neighbors.hpp"
#include "nncert/oracle.hpp"
#include "nncert/parallel.hpp"
#include "nncert/random.hpp"
