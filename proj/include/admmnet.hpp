#pragma once

#include "admmnet/admm_reference.hpp"
#include "admmnet/basic_net.hpp"
#include "admmnet/commands.hpp"
#include "admmnet/container.hpp"
#include "admmnet/data.hpp"
#include "admmnet/errors.hpp"
#include "admmnet/fft.hpp"
#include "admmnet/filters.hpp"
#include "admmnet/generic_net.hpp"
#include "admmnet/gradcheck.hpp"
#include "admmnet/grid.hpp"
#include "admmnet/image_io.hpp"
#include "admmnet/lbfgs.hpp"
#include "admmnet/plf.hpp"
#include "admmnet/positive.hpp"
#include "admmnet/run_config.hpp"
#include "admmnet/sampling.hpp"
#include "admmnet/training.hpp"
