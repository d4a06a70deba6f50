#pragma once

#include "entprop/errors.hpp"
#include "entprop/spin_basis.hpp"
#include "entprop/parallel.hpp"
#include "entprop/spectral.hpp"
#include "entprop/entanglement.hpp"
#include "entprop/timeseries.hpp"
#include "entprop/thermalization.hpp"
#include "entprop/propagation.hpp"
#include "entprop/cli_io.hpp"
