#pragma once

#include "udf/batch.hpp"
#include "udf/classifier.hpp"
#include "udf/codebook.hpp"
#include "udf/config.hpp"
#include "udf/encoding.hpp"
#include "udf/error.hpp"
#include "udf/feature_io.hpp"
#include "udf/fusion.hpp"
#include "udf/kmeans.hpp"
#include "udf/linear_model.hpp"
#include "udf/parallel.hpp"
#include "udf/pipeline.hpp"
#include "udf/pooling.hpp"
#include "udf/synthetic.hpp"
