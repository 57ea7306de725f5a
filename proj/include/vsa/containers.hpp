#pragma once

// Binary container files (all integers and floats little-endian):
//
//   VSAC  codebooks / complex vectors / FPE bases
//         magic "VSAC", version u16, dim u32, count u32, period u32.
//         period == 0: count * dim complex components as (f64 re, f64 im).
//         period  > 0: an FPE base; count must be 1, payload dim * u32
//         phase indices (each in [0, period)).
//   CSCD  dictionary: magic "CSCD", version u16, n u32, P u32, then
//         n * P * P f64, filter-major then row-major (row v, then column u).
//   CSCA  feature maps: magic "CSCA", version u16, n u32, L u32, then
//         n * L * L f64 in the same order.
//   VSAW  whitening transform: magic "VSAW", version u16, flat u32, rank u32,
//         shape count u32, shape side u32, epsilon f64, then flat * rank f64
//         (column-major basis), rank f64 inverse scales, flat f64 mean.
//
// Labels are not part of the containers; template metadata travels in a
// sidecar key=value text file.

#include <filesystem>

#include "vsa/phasor.hpp"
#include "vsa/sparse.hpp"
#include "vsa/whitening.hpp"

namespace vsa {

inline constexpr std::uint16_t kContainerVersion = 1;

void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

void save_complex_vector(const std::filesystem::path& path, const ComplexVector& v);
ComplexVector load_complex_vector(const std::filesystem::path& path);

void save_fpe_base(const std::filesystem::path& path, const FpeBase& base);
FpeBase load_fpe_base(const std::filesystem::path& path);

void save_dictionary(const std::filesystem::path& path, const Dictionary& dict);
Dictionary load_dictionary(const std::filesystem::path& path);

void save_feature_maps(const std::filesystem::path& path, const FeatureMaps& maps);
FeatureMaps load_feature_maps(const std::filesystem::path& path);

void save_whitening(const std::filesystem::path& path, const WhiteningTransform& wt);
WhiteningTransform load_whitening(const std::filesystem::path& path);

// Sidecar key=value metadata (one pair per line, '=' separated).
void save_metadata(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& pairs);
std::vector<std::pair<std::string, std::string>> load_metadata(
    const std::filesystem::path& path);

}  // namespace vsa
