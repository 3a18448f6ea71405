#pragma once

#include "framekit/core.hpp"
#include "framekit/error.hpp"
#include "framekit/io.hpp"
#include "framekit/irregularity.hpp"
#include "framekit/linalg.hpp"
#include "framekit/optimizer.hpp"
#include "framekit/spectral.hpp"
#include "framekit/verification.hpp"
