#pragma once

#include <string>

#include "vascan/pipeline.hpp"

namespace vascan {

// JSON config files; unknown keys are ignored, missing keys keep their
// defaults. Throws std::runtime_error with the offending path on parse or
// validation failure.
PipelineConfig load_pipeline_config(const std::string& path);
PhantomGenConfig load_phantom_gen_config(const std::string& path);

}  // namespace vascan
