#include "dynclean/field_cache.hpp"

#include "dynclean/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dynclean {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'N', 'C', 'F', 'L', 'D', '1'};

template <typename T>
void put(std::vector<char>& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::vector<char>& buf) : buf_(buf) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > buf_.size()) throw InputError("field cache truncated");
        char bytes[sizeof(T)];
        std::memcpy(bytes, buf_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }

    bool at_end() const { return pos_ == buf_.size(); }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    const std::vector<char>& buf_;
    std::size_t pos_ = 8;
};

} // namespace

void write_blob(const fs::path& path, const FieldBlob& blob) {
    std::vector<char> out(kMagic, kMagic + 8);
    put<std::uint32_t>(out, blob.kind);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.height));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.patch_size));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.channels));
    put<std::uint64_t>(out, blob.key);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.aux.size()));
    for (double v : blob.aux) put<double>(out, v);
    out.reserve(out.size() + blob.data.size() * sizeof(float));
    for (float v : blob.data) put<float>(out, v);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw OutputError("cannot write field cache: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw OutputError("cannot write field cache: " + path.string());
}

std::optional<FieldBlob> read_blob(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 8) != 0)
        throw InputError("not a field cache file: " + path.string());

    Reader r(buf);
    FieldBlob blob;
    blob.kind = r.get<std::uint32_t>();
    blob.width = static_cast<int>(r.get<std::uint32_t>());
    blob.height = static_cast<int>(r.get<std::uint32_t>());
    blob.patch_size = static_cast<int>(r.get<std::uint32_t>());
    blob.channels = static_cast<int>(r.get<std::uint32_t>());
    blob.key = r.get<std::uint64_t>();
    const auto aux_count = r.get<std::uint32_t>();
    if (aux_count > r.remaining() / sizeof(double)) throw InputError("field cache truncated");
    blob.aux.resize(aux_count);
    for (auto& v : blob.aux) v = r.get<double>();
    const std::size_t n = static_cast<std::size_t>(blob.width) * blob.height * blob.channels;
    // Checked before allocating so a corrupt header cannot request a huge buffer.
    if (n * sizeof(float) != r.remaining())
        throw InputError("field cache size does not match its header: " + path.string());
    blob.data.resize(n);
    for (auto& v : blob.data) v = r.get<float>();
    if (!r.at_end()) throw InputError("field cache has trailing bytes: " + path.string());
    return blob;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
    return fnv1a(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), seed);
}

std::uint64_t image_hash(const RgbImage& image) {
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(image.width()), static_cast<std::uint32_t>(image.height())};
    std::uint64_t h = fnv1a(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(dims), sizeof(dims)));
    const auto px = image.pixels();
    return fnv1a(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(px.data()), px.size_bytes()), h);
}

FieldBlob to_blob(const DescriptorField& field, std::uint64_t key) {
    FieldBlob blob;
    blob.kind = FieldBlob::kDescriptors;
    blob.width = field.width;
    blob.height = field.height;
    blob.patch_size = field.patch_size;
    blob.channels = kGradientDims + 3;
    blob.key = key;
    blob.aux = {static_cast<double>(field.gradient_max)};
    blob.data.reserve(static_cast<std::size_t>(field.width) * field.height * blob.channels);
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x) {
            const auto fg = field.fg({x, y});
            blob.data.insert(blob.data.end(), fg.begin(), fg.end());
            const auto& fc = field.fc({x, y});
            blob.data.insert(blob.data.end(), fc.begin(), fc.end());
        }
    return blob;
}

DescriptorField descriptors_from_blob(const FieldBlob& blob) {
    if (blob.kind != FieldBlob::kDescriptors || blob.channels != kGradientDims + 3 || blob.aux.size() != 1)
        throw InputError("field cache does not hold descriptors");
    DescriptorField field;
    field.width = blob.width;
    field.height = blob.height;
    field.patch_size = blob.patch_size;
    field.gradient_max = static_cast<float>(blob.aux[0]);
    field.gradient.resize(static_cast<std::size_t>(blob.width) * blob.height * kGradientDims);
    field.color.resize(static_cast<std::size_t>(blob.width) * blob.height);
    const float* src = blob.data.data();
    for (int y = 0; y < blob.height; ++y)
        for (int x = 0; x < blob.width; ++x) {
            auto fg = field.fg({x, y});
            std::copy(src, src + kGradientDims, fg.begin());
            src += kGradientDims;
            field.fc({x, y}) = {src[0], src[1], src[2]};
            src += 3;
        }
    return field;
}

FieldBlob to_blob(const CorrespondenceField& field, const FundamentalMatrix& geometry, std::uint64_t key) {
    FieldBlob blob;
    blob.kind = FieldBlob::kCorrespondence;
    blob.width = field.target.width();
    blob.height = field.target.height();
    blob.channels = 2;
    blob.key = key;
    for (int i = 0; i < 9; ++i) blob.aux.push_back(geometry.F(i / 3, i % 3));
    blob.aux.push_back(geometry.inlier_count);
    blob.aux.push_back(geometry.inlier_ratio);
    blob.aux.push_back(geometry.residual_median);
    blob.data.reserve(field.target.size() * 2);
    for (const Point& p : field.target.pixels()) {
        blob.data.push_back(static_cast<float>(p.x));
        blob.data.push_back(static_cast<float>(p.y));
    }
    return blob;
}

std::pair<CorrespondenceField, FundamentalMatrix> correspondence_from_blob(const FieldBlob& blob, int source_index) {
    if (blob.kind != FieldBlob::kCorrespondence || blob.channels != 2 || blob.aux.size() != 12)
        throw InputError("field cache does not hold a correspondence field");
    CorrespondenceField field{source_index, Plane<Point>(blob.width, blob.height)};
    auto px = field.target.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = {static_cast<int>(blob.data[2 * i]), static_cast<int>(blob.data[2 * i + 1])};
    FundamentalMatrix fm;
    for (int i = 0; i < 9; ++i) fm.F(i / 3, i % 3) = blob.aux[static_cast<std::size_t>(i)];
    fm.inlier_count = static_cast<int>(blob.aux[9]);
    fm.inlier_ratio = blob.aux[10];
    fm.residual_median = blob.aux[11];
    fm.low_support = fm.inlier_ratio < 0.2;
    return {std::move(field), fm};
}

} // namespace dynclean
