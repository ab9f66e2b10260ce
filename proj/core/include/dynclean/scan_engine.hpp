#pragma once

#include "dynclean/clustering.hpp"
#include "dynclean/config.hpp"
#include "dynclean/correspondence.hpp"
#include "dynclean/epipolar.hpp"
#include "dynclean/features.hpp"
#include "dynclean/image.hpp"
#include "dynclean/image_set.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

namespace dynclean {

enum class ScanDirection {
    Down,  ///< row-major, top-left to bottom-right
    Up,    ///< reverse row-major, bottom-right to top-left
};

const char* to_string(ScanDirection direction);

/// Per-pixel labels over the reference: label 1 = static, 0 = dynamic for the current scan;
/// cumulative 1 = labelled dynamic in at least one scan so far.
struct DynamicMap {
    Plane<std::uint8_t> label;
    Mask cumulative;
};

/// Fundamental matrix of one (reference, source) pair plus what it was estimated from.
struct GeometryReport {
    FundamentalMatrix fundamental;
    int match_count = 0;
    /// Counts of sqrt(Sampson) residuals (px) over the harvested matches, bucketed by
    /// kResidualBucketEdges.
    std::vector<int> residual_histogram;
};

inline constexpr std::array<double, 7> kResidualBucketEdges = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};

/// Everything computed before scanning. Vectors are indexed by image index; entries at the
/// reference index are unused except for `lab` and `descriptors`.
struct Precomputed {
    std::vector<LabImage> lab;
    std::vector<DescriptorField> descriptors;  ///< set-normalised
    std::vector<GeometryReport> geometry;
    std::vector<EpipolarKernel> epipolar;
    std::vector<CorrespondenceField> correspondence;
    std::vector<SimilarityMap> similarity;
};

struct PrecomputeOptions {
    /// When non-empty, descriptor and correspondence fields are cached here.
    std::filesystem::path cache_dir;
};

Precomputed precompute(const ImageSet& set, const Config& config, const PrecomputeOptions& options = {});

/// Mutable state owned by the scanner.
struct ScanState {
    RgbImage rgb;                  ///< working reference
    LabImage lab;                  ///< working reference, kept in sync with rgb
    DescriptorField descriptors;   ///< reference descriptors, updated on patch writes
    Plane<std::uint8_t> stale;     ///< descriptors awaiting recomputation
    std::vector<CorrespondenceField> correspondence;  ///< indexed by image index
    std::vector<SimilarityMap> similarity;            ///< indexed by image index
    DynamicMap dynamic;
    ScanDirection direction = ScanDirection::Down;
    int scan_count = 0;
    long dynamic_count_this_scan = 0;
};

/// Outcome of the static/dynamic test at one pixel.
struct Decision {
    bool is_static = true;
    double score = 1.0;               ///< M(x_r)
    std::vector<int> cluster;         ///< indices into the candidate list of the winning cluster A_m
    double cluster_weight = 0.0;      ///< b_m
    ColorMean color_mean{};           ///< confidence-weighted mean f_c over A_m
    std::array<float, kGradientDims> gradient_mean{};  ///< confidence-weighted mean f_g over A_m
};

struct PatchChoice {
    int candidate = -1;  ///< index into the candidate list
    int source = -1;
    Point location;      ///< centre of the chosen patch in the source
    double score = 0.0;
    bool tie_broken = false;
};

/// Emitted every Config::snapshot_every visited pixels and at the end of each scan.
struct ScanProgress {
    const ScanState& state;
    ScanDirection direction;
    int scan_index;
    long visited;
    long dynamic_so_far;
};

class Scanner {
public:
    Scanner(const ImageSet& set, Precomputed precomputed, const Config& config);

    std::vector<Candidate> candidate_set(Point x, ScanDirection direction) const;
    Decision decide(Point x, std::span<const Candidate> candidates);
    PatchChoice select_patch(Point x, const Decision& decision, std::span<const Candidate> candidates,
                             ScanDirection direction);
    void apply_patch(Point x, const PatchChoice& choice);
    void update_correspondence(Point x, const Decision& decision, std::span<const Candidate> candidates);

    /// One full pass; returns the number of pixels labelled dynamic.
    long run_scan(ScanDirection direction);

    /// H(x, location, F_source) with the current reference descriptors at x.
    double match_quality_at(Point x, int source, Point location);

    /// Reference descriptors at x, recomputed first if stale.
    GradientSpan reference_fg(Point x);
    const ColorMean& reference_fc(Point x);

    ScanState& state() { return state_; }
    const ScanState& state() const { return state_; }
    const Precomputed& precomputed() const { return pre_; }
    const Config& config() const { return config_; }
    int reference_index() const { return reference_index_; }
    const std::vector<int>& sources() const { return sources_; }

    void set_progress_callback(std::function<void(const ScanProgress&)> callback) { on_progress_ = std::move(callback); }

private:
    void ensure_fresh(Point x);
    void mark_stale_around(Point x);

    const ImageSet& set_;
    Precomputed pre_;
    Config config_;
    int reference_index_;
    std::vector<int> sources_;
    ScanState state_;
    std::function<void(const ScanProgress&)> on_progress_;
};

struct RunResult {
    Mask dynamic_mask;                 ///< cumulative, 1 = dynamic
    RgbImage cleaned;
    std::vector<long> dynamic_counts;  ///< per scan
    int scans = 0;
    bool converged = false;
    double seconds = 0.0;
    std::vector<GeometryReport> geometry;  ///< indexed by image index
};

struct RunOptions {
    PrecomputeOptions precompute;
    std::function<void(const ScanProgress&)> on_progress;
};

/// Precompute, then alternate down/up scans until one labels nothing dynamic or max_scans is hit.
RunResult run(const ImageSet& set, const Config& config, const RunOptions& options = {});

} // namespace dynclean
