#pragma once

#include "analyzer.hpp"
#include "corpus.hpp"
#include "dataset.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "index.hpp"
#include "index_io.hpp"
#include "keywords.hpp"
#include "method_extractor.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "reformulate.hpp"
#include "relevance.hpp"
#include "remote.hpp"
#include "stopwords.hpp"

namespace iqloc {

inline constexpr std::string_view version = "0.1.0";

}  // namespace iqloc
