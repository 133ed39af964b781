#pragma once

#include "rpc/common.hpp"
#include "rpc/uncertain_data.hpp"
#include "rpc/divergence.hpp"
#include "rpc/selection.hpp"
#include "rpc/kmeans.hpp"
#include "rpc/spectral.hpp"
#include "rpc/evaluation.hpp"
#include "rpc/pipeline.hpp"
#include "rpc/synthetic.hpp"
