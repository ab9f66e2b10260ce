#include "dynclean/image_set.hpp"

#include "dynclean/error.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace dynclean {
namespace fs = std::filesystem;

namespace {

bool has_raster_extension(const fs::path& p) {
    static constexpr std::array<std::string_view, 7> exts = {".png", ".jpg", ".jpeg", ".bmp",
                                                              ".tif", ".tiff", ".ppm"};
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return std::find(exts.begin(), exts.end(), ext) != exts.end();
}

RgbImage from_mat(const cv::Mat& bgr) {
    RgbImage out(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) out(x, y) = {row[x][2], row[x][1], row[x][0]};
    }
    return out;
}

} // namespace

std::vector<int> ImageSet::source_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (i != reference_index) out.push_back(i);
    return out;
}

void ImageSet::validate(int patch_size) const {
    if (images.size() < 2) throw InputError("insufficient views: need at least 2 images, got " +
                                            std::to_string(images.size()));
    if (reference_index < 0 || reference_index >= size())
        throw InputError("reference index " + std::to_string(reference_index) + " out of range");
    for (std::size_t i = 0; i < images.size(); ++i) {
        const int min_side = 2 * patch_size + 1;
        if (images[i].width() < min_side || images[i].height() < min_side) {
            const std::string name = i < names.size() ? names[i] : std::to_string(i);
            throw InputError("image " + name + " is smaller than " + std::to_string(min_side) + "x" +
                             std::to_string(min_side) + " pixels");
        }
    }
}

ReferenceSelector parse_reference_selector(const std::string& text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc{} && ptr == text.data() + text.size()) return value;
    return text;
}

RgbImage read_image(const fs::path& path) {
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (mat.empty()) throw InputError("cannot decode image: " + path.string());
    return from_mat(mat);
}

void write_image(const fs::path& path, const RgbImage& image) {
    cv::Mat mat(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width(); ++x) {
            const Rgb8 c = image(x, y);
            row[x] = {c.b, c.g, c.r};
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception&) {
        ok = false;
    }
    if (!ok) throw OutputError("cannot write image: " + path.string());
}

Mask read_mask(const fs::path& path) {
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (mat.empty()) throw InputError("cannot decode mask: " + path.string());
    Mask out(mat.cols, mat.rows);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < mat.cols; ++x) out(x, y) = row[x] ? 1 : 0;
    }
    return out;
}

void write_mask(const fs::path& path, const Mask& mask) {
    cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.width(); ++x) row[x] = mask(x, y) ? 255 : 0;
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception&) {
        ok = false;
    }
    if (!ok) throw OutputError("cannot write mask: " + path.string());
}

ImageSet load_image_set(const fs::path& directory, const ReferenceSelector& reference) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw InputError("not a directory: " + directory.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory))
        if (entry.is_regular_file() && has_raster_extension(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    if (files.size() < 2)
        throw InputError("insufficient views: " + directory.string() + " holds " + std::to_string(files.size()) +
                         " image(s), need at least 2");

    ImageSet set;
    for (const auto& f : files) {
        set.images.push_back(read_image(f));
        set.names.push_back(f.filename().string());
    }

    if (const int* idx = std::get_if<int>(&reference)) {
        if (*idx < 0 || *idx >= set.size())
            throw InputError("reference index " + std::to_string(*idx) + " out of range [0, " +
                             std::to_string(set.size()) + ")");
        set.reference_index = *idx;
    } else {
        const auto& name = std::get<std::string>(reference);
        auto it = std::find(set.names.begin(), set.names.end(), name);
        if (it == set.names.end()) throw InputError("reference image not found: " + name);
        set.reference_index = static_cast<int>(it - set.names.begin());
    }
    return set;
}

ImageSet make_image_set(std::vector<RgbImage> images, int reference_index) {
    ImageSet set;
    set.images = std::move(images);
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "view_%02zu.png", i);
        set.names.emplace_back(buf);
    }
    set.reference_index = reference_index;
    return set;
}

OutputPaths write_outputs(const Mask& dynamic, const RgbImage& cleaned_reference, const fs::path& output_dir,
                          const std::string& reference_stem) {
    if (dynamic.width() != cleaned_reference.width() || dynamic.height() != cleaned_reference.height())
        throw OutputError("mask and cleaned reference differ in size");
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec || !fs::is_directory(output_dir)) throw OutputError("cannot create output directory: " + output_dir.string());

    OutputPaths paths{output_dir / (reference_stem + "_mask.png"), output_dir / (reference_stem + "_clean.png")};
    write_mask(paths.mask, dynamic);
    write_image(paths.clean, cleaned_reference);
    return paths;
}

} // namespace dynclean
