#pragma once

#include <string>

#include "adarec/llm_client.hpp"

namespace adarec::mock {

// Offline stand-in for a chat model, driven only by the prompt text.
//  - profiling prompts: a deterministic paragraph built from the raw values;
//  - binary reasoning prompts: the majority "Observed outcome" among the
//    pattern cases (0 when the prompt carries no cases);
//  - brand prompts: the most frequent case brands, padded from the catalog.
std::string neighbor_majority(const llm::CompletionRequest& request);

// Responder for a `mock_mode` config value. Throws LlmError(ConfigError) for
// unknown modes.
llm::MockBackend::Responder responder(const std::string& mode);

}  // namespace adarec::mock
