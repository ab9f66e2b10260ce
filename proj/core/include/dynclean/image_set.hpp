#pragma once

#include "dynclean/image.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace dynclean {

/// Multi-view capture of one scene. images[reference_index] is the view that gets cleaned;
/// every other image is a source view.
struct ImageSet {
    std::vector<RgbImage> images;
    std::vector<std::string> names;  ///< file name of each image, same order as images
    int reference_index = 0;

    int size() const { return static_cast<int>(images.size()); }
    const RgbImage& reference() const { return images.at(reference_index); }
    /// Indices of the source views in ascending order.
    std::vector<int> source_indices() const;

    /// Throws InputError when the set violates its invariants for the given patch size.
    void validate(int patch_size) const;
};

/// Reference chosen either by file name or by position in the sorted listing.
using ReferenceSelector = std::variant<int, std::string>;

/// Parses "3" as an index and anything else as a file name.
ReferenceSelector parse_reference_selector(const std::string& text);

/// Loads every decodable raster (png, jpg, jpeg, bmp, tif, tiff) in `directory`, in lexicographic
/// file-name order.
ImageSet load_image_set(const std::filesystem::path& directory, const ReferenceSelector& reference);

/// Builds a set from in-memory images, named view_00.png, view_01.png, ...
ImageSet make_image_set(std::vector<RgbImage> images, int reference_index);

RgbImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RgbImage& image);

/// Reads an 8-bit single-channel image; nonzero pixels become 1.
Mask read_mask(const std::filesystem::path& path);
/// Writes 255 where mask is nonzero, 0 elsewhere.
void write_mask(const std::filesystem::path& path, const Mask& mask);

struct OutputPaths {
    std::filesystem::path mask;
    std::filesystem::path clean;
};

/// Writes `<stem>_mask.png` (255 = dynamic) and `<stem>_clean.png` into output_dir, creating it
/// if necessary. `dynamic` holds 1 for dynamic pixels.
OutputPaths write_outputs(const Mask& dynamic, const RgbImage& cleaned_reference,
                          const std::filesystem::path& output_dir, const std::string& reference_stem);

} // namespace dynclean
