#pragma once

#include <cstdint>

#include "qsuggest/backend.hpp"

namespace qsuggest::backend {

// Offline responder for the mock backend. Generation prompts get k
// pipe-separated suggestion lines built from the context's own words, judge
// prompts get a one-word verdict. Output depends only on the prompt and seed.
Responder make_synthetic_responder(std::uint64_t seed);

}  // namespace qsuggest::backend
