#pragma once

#include "dynclean/correspondence.hpp"
#include "dynclean/epipolar.hpp"
#include "dynclean/features.hpp"
#include "dynclean/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace dynclean {

/// On-disk container shared by the descriptor and correspondence caches. Little-endian:
///   char[8] magic "DYNCFLD1"; u32 kind; u32 width; u32 height; u32 patch_size; u32 channels;
///   u64 key; u32 aux_count; f64 aux[aux_count]; f32 data[height][width][channels]
struct FieldBlob {
    enum Kind : std::uint32_t { kDescriptors = 1, kCorrespondence = 2 };

    std::uint32_t kind = kDescriptors;
    int width = 0;
    int height = 0;
    int patch_size = 0;
    int channels = 0;
    std::uint64_t key = 0;
    std::vector<double> aux;
    std::vector<float> data;
};

void write_blob(const std::filesystem::path& path, const FieldBlob& blob);
/// Missing file -> nullopt. Malformed file -> InputError.
std::optional<FieldBlob> read_blob(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t image_hash(const RgbImage& image);

FieldBlob to_blob(const DescriptorField& field, std::uint64_t key);
/// Throws InputError when the blob does not hold descriptors.
DescriptorField descriptors_from_blob(const FieldBlob& blob);

FieldBlob to_blob(const CorrespondenceField& field, const FundamentalMatrix& geometry, std::uint64_t key);
/// Throws InputError when the blob does not hold a correspondence field.
std::pair<CorrespondenceField, FundamentalMatrix> correspondence_from_blob(const FieldBlob& blob, int source_index);

} // namespace dynclean
