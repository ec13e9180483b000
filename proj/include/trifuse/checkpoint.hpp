#pragma once

// Checkpoints are a JSON manifest plus a raw little-endian float32 blob.
// Saving writes every registered parameter; loading fills matching names in
// an already-built ParamStore, so a manifest that only carries adapter and
// adaptor sections leaves the remaining tensors at their init values.

#include <map>
#include <string>

#include "trifuse/adam.hpp"

namespace trifuse {

void save_checkpoint(const std::string& manifest_path, const ParamStore& store,
                     const std::map<std::string, std::string>& meta = {});

// Copies manifest params into same-named store tensors. Unknown names and
// shape mismatches throw IntegrityError; store params absent from the
// manifest are left untouched. Returns the loaded parameter names.
std::vector<std::string> load_checkpoint(const std::string& manifest_path, ParamStore& store);

std::map<std::string, std::string> checkpoint_meta(const std::string& manifest_path);

}  // namespace trifuse
