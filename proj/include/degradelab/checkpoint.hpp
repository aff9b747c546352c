#pragma once

#include <filesystem>
#include <optional>

#include "degradelab/adam.hpp"
#include "degradelab/nets.hpp"

namespace degradelab {

/// Binary checkpoint:
///   "DLNET1" | u32 meta_len | meta ("role=<r> width=<n> blocks=<b> scale=<s>")
///   | u32 record_count | records
/// record: u32 name_len | name | u32 ndims | u32 dims[ndims] | f32 values
/// All integers and floats little-endian. Optimizer moments are stored as
/// records named "adam.m/<param>", "adam.v/<param>" and a scalar "adam.t".
void save_checkpoint(const std::filesystem::path& path, const Net<float>& net,
                     const AdamState<float>* adam = nullptr);

struct Checkpoint {
  Net<float> net;
  std::optional<AdamState<float>> adam;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

NetSpec spec_from_meta(const std::string& meta);
std::string meta_from_spec(const NetSpec& spec);

}  // namespace degradelab
