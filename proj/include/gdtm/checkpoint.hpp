#pragma once

#include "gdtm/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace gdtm {

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
  SurrogateModel model;
  std::uint64_t training_seed = 0;
};

/// JSON text. Writing the result of parsing a written checkpoint reproduces
/// the original bytes.
std::string write_checkpoint(const Checkpoint& checkpoint);

/// Throws io on malformed JSON or an unknown schema version and compat when
/// array lengths disagree with the declared layout.
Checkpoint read_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gdtm
