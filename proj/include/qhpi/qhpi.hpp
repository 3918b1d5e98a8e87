#pragma once

#include "qhpi/errors.hpp"
#include "qhpi/util.hpp"
#include "qhpi/statevector.hpp"
#include "qhpi/config_space.hpp"
#include "qhpi/csv.hpp"
#include "qhpi/circuit.hpp"
#include "qhpi/data.hpp"
#include "qhpi/trainer.hpp"
#include "qhpi/forest.hpp"
#include "qhpi/fanova.hpp"
#include "qhpi/verification.hpp"
#include "qhpi/pipeline.hpp"
