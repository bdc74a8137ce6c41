#pragma once

// Artifacts on disk: raw little-endian float64 blocks in lattice order
// (GridSpec::flat, components one after another) with a JSON sidecar.
// Every file is written to a temporary sibling and renamed into place.

#include <string>

#include "json.hpp"

#include "conewise/atomic_decomposition.hpp"
#include "conewise/grid_field.hpp"
#include "conewise/hardy_atoms.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/tent_space.hpp"

namespace conewise {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

void write_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

Json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const Json& j);
Json ladder_to_json(const TLadder& l);
TLadder ladder_from_json(const Json& j);

// <prefix>.json and <prefix>.raw.
void save_field(const std::string& prefix, const FormField& u);
FormField load_field(const std::string& prefix);
void save_kernel(const std::string& prefix, const SampledKernel& k);
SampledKernel load_kernel(const std::string& prefix);
// The raw block holds lambda; derived data is rebuilt on load.
void save_domain(const std::string& prefix, const LipschitzGraphDomain& d);
LipschitzGraphDomain load_domain(const std::string& prefix);
void save_tent(const std::string& prefix, const TentFunction& U);
TentFunction load_tent(const std::string& prefix);

// <dir>/index.json plus <dir>/atoms.raw; each index entry records the byte
// offset of its block.
void save_decomposition(const std::string& dir, const TentDecomposition& dec);
void save_hardy_atoms(const std::string& dir, const HardyResult& r);

}  // namespace conewise
