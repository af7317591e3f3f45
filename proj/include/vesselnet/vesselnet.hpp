#pragma once

#include "vesselnet/characteristics.hpp"
#include "vesselnet/cli.hpp"
#include "vesselnet/config.hpp"
#include "vesselnet/errors.hpp"
#include "vesselnet/field.hpp"
#include "vesselnet/linalg.hpp"
#include "vesselnet/models.hpp"
#include "vesselnet/network.hpp"
#include "vesselnet/output.hpp"
#include "vesselnet/scheme.hpp"
#include "vesselnet/signal.hpp"
#include "vesselnet/verify.hpp"
