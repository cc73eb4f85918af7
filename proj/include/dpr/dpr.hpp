#pragma once

#include "dpr/corpus.hpp"
#include "dpr/dataset.hpp"
#include "dpr/dense_index.hpp"
#include "dpr/encoder.hpp"
#include "dpr/error.hpp"
#include "dpr/evaluator.hpp"
#include "dpr/lexical.hpp"
#include "dpr/training.hpp"
#include "dpr/types.hpp"

namespace dpr {
inline constexpr std::string_view kVersion = "0.1.0";
}
