#pragma once

#include "medprompt/evolution.hpp"

#include <string>

namespace medprompt {

/// Serialize a run state (the checkpoint payload). Genomes embed their
/// serialized object under the "genome" key; fitness scores are stored as
/// plain numbers and re-derived on resume.
std::string serialize_run_state(const RunState& state, const CategorySet& categories);
RunState deserialize_run_state(std::string_view bytes, const CategorySet& categories);

/// Write a checkpoint file (ckpt_g<generation>.json) via write-then-rename.
void checkpoint_write(const RunState& state, const std::string& dir,
                      const CategorySet& categories);

/// Load the checkpoint with the highest generation. Throws ValidationError
/// when the directory holds no checkpoint and ParseError on corruption.
RunState checkpoint_resume(const std::string& dir, const CategorySet& categories);

} // namespace medprompt
