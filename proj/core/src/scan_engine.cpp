#include "dynclean/scan_engine.hpp"

#include "dynclean/color.hpp"
#include "dynclean/field_cache.hpp"
#include "dynclean/kernels.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace dynclean {
namespace {

/// Runs body(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> workers;
    for (int t = 0; t < threads; ++t)
        workers.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    workers.clear();
    if (failure) std::rethrow_exception(failure);
}

std::filesystem::path cache_file(const std::filesystem::path& dir, const char* prefix, std::uint64_t key) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%016llx.bin", prefix, static_cast<unsigned long long>(key));
    return dir / name;
}

DescriptorField raw_descriptors(const RgbImage& rgb, const LabImage& lab, int p, const std::filesystem::path& cache_dir) {
    if (cache_dir.empty()) return dense_descriptor_field(lab, p);
    const std::uint64_t key = image_hash(rgb) ^ (static_cast<std::uint64_t>(p) * 0x9E3779B97F4A7C15ull);
    const auto path = cache_file(cache_dir, "desc", key);
    if (auto blob = read_blob(path); blob && blob->key == key && blob->width == lab.width() &&
                                     blob->height == lab.height() && blob->patch_size == p) {
        spdlog::debug("descriptor cache hit: {}", path.string());
        return descriptors_from_blob(*blob);
    }
    DescriptorField field = dense_descriptor_field(lab, p);
    write_blob(path, to_blob(field, key));
    return field;
}

std::vector<int> residual_histogram(std::span<const Match> matches, const Eigen::Matrix3d& F) {
    std::vector<int> hist(kResidualBucketEdges.size() + 1, 0);
    for (const auto& m : matches) {
        const double r = std::sqrt(sampson_sq(m.x1, m.x2, F));
        const auto bucket = std::upper_bound(kResidualBucketEdges.begin(), kResidualBucketEdges.end(), r) -
                            kResidualBucketEdges.begin();
        ++hist[static_cast<std::size_t>(bucket)];
    }
    return hist;
}

/// Patch-selection score of one overlap region: lambda6 S_e(g_c) + lambda7 S_e(g_h).
double overlap_similarity(const PatchDescriptor& q, const PatchDescriptor& r, const Config& config) {
    return config.lambda6 * s_e(q.color, r.color, config.sigma_c) + config.lambda7 * s_e(q.hog, r.hog, config.sigma_h);
}

} // namespace

const char* to_string(ScanDirection direction) { return direction == ScanDirection::Down ? "down" : "up"; }

Precomputed precompute(const ImageSet& set, const Config& config, const PrecomputeOptions& options) {
    config.validate();
    set.validate(config.patch_size);
    const int n = set.size();
    const int ref = set.reference_index;
    if (!options.cache_dir.empty()) std::filesystem::create_directories(options.cache_dir);

    Precomputed pre;
    pre.lab.resize(static_cast<std::size_t>(n));
    pre.descriptors.resize(static_cast<std::size_t>(n));
    parallel_for(n, config.threads, [&](int i) {
        pre.lab[i] = rgb_to_lab(set.images[i]);
        pre.descriptors[i] = raw_descriptors(set.images[i], pre.lab[i], config.patch_size, options.cache_dir);
    });
    normalize_fields(pre.descriptors);

    const RgbImage& reference = set.reference();
    const double coordinate_scale =
        config.normalize_coordinates ? std::hypot(static_cast<double>(reference.width()), reference.height()) : 1.0;

    pre.geometry.resize(static_cast<std::size_t>(n));
    pre.epipolar.resize(static_cast<std::size_t>(n));
    pre.correspondence.resize(static_cast<std::size_t>(n));
    pre.similarity.resize(static_cast<std::size_t>(n));

    Config key_config = config;
    key_config.threads = 0;
    key_config.snapshot_every = 0;
    const std::uint64_t config_key = fnv1a(config_to_json(key_config));
    const std::uint64_t ref_key = image_hash(reference);

    const auto sources = set.source_indices();
    parallel_for(static_cast<int>(sources.size()), config.threads, [&](int k) {
        const int s = sources[static_cast<std::size_t>(k)];
        const DescriptorField& rf = pre.descriptors[ref];
        const DescriptorField& sf = pre.descriptors[s];

        const std::uint64_t key = fnv1a(std::to_string(s), image_hash(set.images[s]) ^ ref_key ^ config_key);
        const auto path = options.cache_dir.empty() ? std::filesystem::path{} : cache_file(options.cache_dir, "corr", key);
        if (!path.empty()) {
            if (auto blob = read_blob(path); blob && blob->key == key && blob->width == rf.width && blob->height == rf.height) {
                auto [field, fm] = correspondence_from_blob(*blob, s);
                pre.epipolar[s] = EpipolarKernel(fm.F, config.sigma_e, coordinate_scale);
                const auto matches = harvest_matches(rf, sf, field, config.harvest_count, config.harvest_stride, config);
                pre.geometry[s] = {fm, static_cast<int>(matches.size()), residual_histogram(matches, fm.F)};
                pre.correspondence[s] = std::move(field);
                pre.similarity[s] = similarity_map(rf, sf, pre.correspondence[s], pre.epipolar[s], config);
                return;
            }
        }

        DenseFieldOptions search;
        search.iterations = config.pm_iters;
        search.seed = config.seed;
        CorrespondenceField field = estimate_dense_field(rf, sf, s, config, search);

        const auto matches = harvest_matches(rf, sf, field, config.harvest_count, config.harvest_stride, config);
        RansacOptions ransac;
        ransac.threshold = config.ransac_threshold;
        ransac.confidence = config.ransac_confidence;
        ransac.max_iterations = config.ransac_max_iterations;
        ransac.seed = config.seed ^ (0xA5A5A5A5ull + static_cast<std::uint64_t>(s));
        const FundamentalMatrix fm = estimate_fundamental(matches, ransac);
        if (fm.low_support)
            spdlog::warn("source {}: only {:.1f}% of {} matches support the epipolar geometry", set.names[s],
                         100.0 * fm.inlier_ratio, matches.size());
        pre.geometry[s] = {fm, static_cast<int>(matches.size()), residual_histogram(matches, fm.F)};
        pre.epipolar[s] = EpipolarKernel(fm.F, config.sigma_e, coordinate_scale);

        if (config.pm_refine_iters > 0) {
            DenseFieldOptions refine;
            refine.iterations = config.pm_refine_iters;
            refine.seed = config.seed + 1;
            refine.epipolar = &pre.epipolar[s];
            refine.initial = &field;
            field = estimate_dense_field(rf, sf, s, config, refine);
        }
        if (!path.empty()) write_blob(path, to_blob(field, fm, key));
        pre.correspondence[s] = std::move(field);
        pre.similarity[s] = similarity_map(rf, sf, pre.correspondence[s], pre.epipolar[s], config);
        spdlog::debug("source {}: F inliers {}/{} median residual {:.3f}px", set.names[s], fm.inlier_count,
                      matches.size(), fm.residual_median);
    });
    return pre;
}

Scanner::Scanner(const ImageSet& set, Precomputed precomputed, const Config& config)
    : set_(set), pre_(std::move(precomputed)), config_(config), reference_index_(set.reference_index),
      sources_(set.source_indices()) {
    const RgbImage& ref = set.reference();
    const int w = ref.width();
    const int h = ref.height();
    state_.rgb = ref;
    state_.lab = pre_.lab.at(static_cast<std::size_t>(reference_index_));
    state_.descriptors = pre_.descriptors.at(static_cast<std::size_t>(reference_index_));
    state_.stale = Plane<std::uint8_t>(w, h, 0);
    state_.correspondence = pre_.correspondence;
    state_.similarity = pre_.similarity;
    state_.dynamic.label = Plane<std::uint8_t>(w, h, 1);
    state_.dynamic.cumulative = Mask(w, h, 0);
}

void Scanner::ensure_fresh(Point x) {
    if (state_.stale(x)) {
        refresh_descriptor(state_.descriptors, state_.lab, x);
        state_.stale(x) = 0;
    }
}

GradientSpan Scanner::reference_fg(Point x) {
    ensure_fresh(x);
    return state_.descriptors.fg(x);
}

const ColorMean& Scanner::reference_fc(Point x) {
    ensure_fresh(x);
    return state_.descriptors.fc(x);
}

void Scanner::mark_stale_around(Point x) {
    // Any pixel whose p x p support touches the written patch.
    const Rect r = Rect::centered(x, config_.patch_size - 1).intersect(state_.stale.bounds());
    for (int y = r.y0; y < r.y1; ++y)
        for (int xx = r.x0; xx < r.x1; ++xx) state_.stale(xx, y) = 1;
}

std::vector<Candidate> Scanner::candidate_set(Point x, ScanDirection direction) const {
    const bool down = direction == ScanDirection::Down;
    const int w = state_.rgb.width();
    const int h = state_.rgb.height();

    struct Neighbor {
        Point at;
        Point shift;
        CandidateOrigin origin;
    };
    std::array<Neighbor, 2> neighbors = down ? std::array<Neighbor, 2>{Neighbor{{x.x - 1, x.y}, {1, 0}, CandidateOrigin::Left},
                                                                       Neighbor{{x.x, x.y - 1}, {0, 1}, CandidateOrigin::Up}}
                                             : std::array<Neighbor, 2>{Neighbor{{x.x + 1, x.y}, {-1, 0}, CandidateOrigin::Right},
                                                                       Neighbor{{x.x, x.y + 1}, {0, -1}, CandidateOrigin::Bottom}};

    std::vector<Candidate> out;
    out.reserve(sources_.size() * 2);
    for (int s : sources_) {
        const auto& field = state_.correspondence[static_cast<std::size_t>(s)];
        const auto& sim = state_.similarity[static_cast<std::size_t>(s)];
        const RgbImage& src = set_.images[static_cast<std::size_t>(s)];
        for (const auto& nb : neighbors) {
            if (nb.at.x < 0 || nb.at.y < 0 || nb.at.x >= w || nb.at.y >= h) continue;
            const Point t = field.target(nb.at);
            out.push_back({src.clamp(t + nb.shift), s, nb.origin, sim.value(nb.at), t});
        }
    }
    return out;
}

Decision Scanner::decide(Point x, std::span<const Candidate> candidates) {
    Decision d;
    if (candidates.empty()) return d;  // static by decree

    const ClusterSet clusters = dbscan(candidates, pre_.descriptors, config_);
    std::vector<std::vector<int>> groups = clusters.clusters;
    for (int i : clusters.noise) groups.push_back({i});

    const auto weight = [&](const std::vector<int>& g) {
        double b = 0.0;
        for (int i : g) b += candidates[static_cast<std::size_t>(i)].confidence;
        return b;
    };
    const auto smallest_source = [&](const std::vector<int>& g) {
        int s = candidates[static_cast<std::size_t>(g.front())].source;
        for (int i : g) s = std::min(s, candidates[static_cast<std::size_t>(i)].source);
        return s;
    };

    std::size_t best = 0;
    double best_weight = weight(groups[0]);
    for (std::size_t k = 1; k < groups.size(); ++k) {
        const double b = weight(groups[k]);
        bool better = b > best_weight;
        if (b == best_weight) {
            if (groups[k].size() != groups[best].size())
                better = groups[k].size() > groups[best].size();
            else
                better = smallest_source(groups[k]) < smallest_source(groups[best]);
        }
        if (better) {
            best = k;
            best_weight = b;
        }
    }
    d.cluster = groups[best];
    d.cluster_weight = best_weight;

    // Confidence-weighted descriptor means; uniform weights if every confidence is zero.
    const bool uniform = best_weight <= 0.0;
    const double total = uniform ? static_cast<double>(d.cluster.size()) : best_weight;
    std::array<double, 3> fc{};
    std::array<double, kGradientDims> fg{};
    for (int i : d.cluster) {
        const Candidate& c = candidates[static_cast<std::size_t>(i)];
        const DescriptorField& field = pre_.descriptors[static_cast<std::size_t>(c.source)];
        const double wgt = uniform ? 1.0 : c.confidence;
        const auto& cfc = field.fc(c.location);
        for (int k = 0; k < 3; ++k) fc[k] += wgt * cfc[k];
        const auto cfg = field.fg(c.location);
        for (int k = 0; k < kGradientDims; ++k) fg[k] += wgt * cfg[k];
    }
    for (int k = 0; k < 3; ++k) d.color_mean[k] = static_cast<float>(fc[k] / total);
    for (int k = 0; k < kGradientDims; ++k) d.gradient_mean[k] = static_cast<float>(fg[k] / total);

    d.score = config_.lambda4() * s_e(reference_fc(x), d.color_mean, config_.sigma_c) +
              config_.lambda5() * s_e(reference_fg(x), d.gradient_mean, config_.sigma_g);
    d.is_static = d.score > config_.t_r;
    return d;
}

PatchChoice Scanner::select_patch(Point x, const Decision& decision, std::span<const Candidate> candidates,
                                  ScanDirection direction) {
    if (decision.cluster.empty()) throw std::logic_error("select_patch called without a winning cluster");
    const int r = config_.patch_size / 2;
    const Rect placed = Rect::centered(x, r);
    const bool down = direction == ScanDirection::Down;
    const std::array<Point, 2> neighbor_centers =
        down ? std::array<Point, 2>{Point{x.x - 1, x.y}, Point{x.x, x.y - 1}}
             : std::array<Point, 2>{Point{x.x + 1, x.y}, Point{x.x, x.y + 1}};

    // Overlap regions w^i (cropped to the reference) and the reference side's descriptors.
    std::vector<Rect> overlaps;
    std::vector<PatchDescriptor> reference_side;
    for (Point c : neighbor_centers) {
        if (!state_.lab.contains(c)) continue;
        const Rect w = placed.intersect(Rect::centered(c, r)).intersect(state_.lab.bounds());
        if (w.empty()) continue;
        overlaps.push_back(w);
        reference_side.push_back(region_descriptor(state_.lab, w));
    }

    std::vector<double> scores;
    scores.reserve(decision.cluster.size());
    for (int idx : decision.cluster) {
        const Candidate& c = candidates[static_cast<std::size_t>(idx)];
        const LabImage& src_lab = pre_.lab[static_cast<std::size_t>(c.source)];
        const Point offset = c.location - x;
        double score = 0.0;
        for (std::size_t i = 0; i < overlaps.size(); ++i) {
            const Rect& w = overlaps[i];
            const Rect in_source{w.x0 + offset.x, w.y0 + offset.y, w.x1 + offset.x, w.y1 + offset.y};
            score += overlap_similarity(region_descriptor(src_lab, in_source), reference_side[i], config_);
        }
        score += config_.lambda8 * pre_.epipolar[static_cast<std::size_t>(c.source)].similarity(x, c.location);
        scores.push_back(score);
    }

    const double best_score = *std::max_element(scores.begin(), scores.end());
    std::vector<std::size_t> tied;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (scores[k] >= best_score - config_.tie_epsilon) tied.push_back(k);

    std::size_t chosen = tied.front();
    if (tied.size() > 1) {
        // Nearest to the cluster's mean descriptors; then lowest source index.
        double best_distance = std::numeric_limits<double>::infinity();
        for (std::size_t k : tied) {
            const Candidate& c = candidates[static_cast<std::size_t>(decision.cluster[k])];
            const DescriptorField& field = pre_.descriptors[static_cast<std::size_t>(c.source)];
            const double dist = config_.lambda4() * squared_distance(decision.color_mean, field.fc(c.location)) +
                                config_.lambda5() * squared_distance(decision.gradient_mean, field.fg(c.location));
            const int chosen_source = candidates[static_cast<std::size_t>(decision.cluster[chosen])].source;
            if (dist < best_distance || (dist == best_distance && c.source < chosen_source)) {
                best_distance = dist;
                chosen = k;
            }
        }
    }

    const int idx = decision.cluster[chosen];
    const Candidate& c = candidates[static_cast<std::size_t>(idx)];
    return {idx, c.source, c.location, scores[chosen], tied.size() > 1};
}

void Scanner::apply_patch(Point x, const PatchChoice& choice) {
    const int r = config_.patch_size / 2;
    const RgbImage& src_rgb = set_.images[static_cast<std::size_t>(choice.source)];
    const LabImage& src_lab = pre_.lab[static_cast<std::size_t>(choice.source)];
    const Rect region = Rect::centered(x, r).intersect(state_.rgb.bounds());
    for (int y = region.y0; y < region.y1; ++y)
        for (int xx = region.x0; xx < region.x1; ++xx) {
            const int sx = choice.location.x + (xx - x.x);
            const int sy = choice.location.y + (y - x.y);
            state_.rgb(xx, y) = src_rgb.clamped(sx, sy);
            state_.lab(xx, y) = src_lab.clamped(sx, sy);
        }

    if (config_.descriptor_refresh == DescriptorRefresh::StaleNeighbors) mark_stale_around(x);

    const DescriptorField& src_field = pre_.descriptors[static_cast<std::size_t>(choice.source)];
    const auto src_fg = src_field.fg(choice.location);
    auto fg = state_.descriptors.fg(x);
    std::copy(src_fg.begin(), src_fg.end(), fg.begin());
    state_.descriptors.fc(x) = src_field.fc(choice.location);
    state_.stale(x) = 0;
}

double Scanner::match_quality_at(Point x, int source, Point location) {
    ensure_fresh(x);
    return match_quality(state_.descriptors, x, pre_.descriptors[static_cast<std::size_t>(source)], location,
                         pre_.epipolar[static_cast<std::size_t>(source)], config_);
}

void Scanner::update_correspondence(Point x, const Decision& decision, std::span<const Candidate> candidates) {
    std::vector<char> in_cluster(candidates.size(), 0);
    for (int i : decision.cluster) in_cluster[static_cast<std::size_t>(i)] = 1;

    for (int s : sources_) {
        std::vector<std::size_t> mine;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (candidates[i].source == s) mine.push_back(i);
        if (mine.empty()) continue;

        std::vector<std::size_t> agreeing;
        for (std::size_t i : mine)
            if (in_cluster[i]) agreeing.push_back(i);

        Point chosen;
        if (!agreeing.empty()) {
            // One agreeing candidate: take it. Two: the one with the better match quality.
            chosen = candidates[agreeing.front()].location;
            double best = match_quality_at(x, s, chosen);
            for (std::size_t k = 1; k < agreeing.size(); ++k) {
                const Point loc = candidates[agreeing[k]].location;
                const double q = match_quality_at(x, s, loc);
                if (q > best) {
                    best = q;
                    chosen = loc;
                }
            }
        } else {
            // Occluded in this source: follow geometry alone over shifted and unshifted matches.
            std::vector<Point> pool;
            for (std::size_t i : mine) pool.push_back(candidates[i].location);
            for (std::size_t i : mine) pool.push_back(candidates[i].neighbor_target);
            const EpipolarKernel& epi = pre_.epipolar[static_cast<std::size_t>(s)];
            chosen = pool.front();
            double best = epi.similarity(x, chosen);
            for (std::size_t k = 1; k < pool.size(); ++k) {
                const double sf = epi.similarity(x, pool[k]);
                if (sf > best) {
                    best = sf;
                    chosen = pool[k];
                }
            }
        }
        state_.correspondence[static_cast<std::size_t>(s)].target(x) = chosen;
        state_.similarity[static_cast<std::size_t>(s)].value(x) = static_cast<float>(match_quality_at(x, s, chosen));
    }
}

long Scanner::run_scan(ScanDirection direction) {
    const int w = state_.rgb.width();
    const int h = state_.rgb.height();
    state_.direction = direction;
    state_.dynamic_count_this_scan = 0;
    std::fill(state_.dynamic.label.pixels().begin(), state_.dynamic.label.pixels().end(), std::uint8_t{1});
    ++state_.scan_count;

    const bool down = direction == ScanDirection::Down;
    long visited = 0;
    for (int i = 0; i < h; ++i) {
        const int y = down ? i : h - 1 - i;
        for (int j = 0; j < w; ++j) {
            const Point x{down ? j : w - 1 - j, y};
            const auto candidates = candidate_set(x, direction);
            const Decision decision = decide(x, candidates);
            if (!decision.is_static) {
                state_.dynamic.label(x) = 0;
                state_.dynamic.cumulative(x) = 1;
                ++state_.dynamic_count_this_scan;
                const PatchChoice choice = select_patch(x, decision, candidates, direction);
                apply_patch(x, choice);
                update_correspondence(x, decision, candidates);
            }
            ++visited;
            if (on_progress_ && config_.snapshot_every > 0 && visited % config_.snapshot_every == 0)
                on_progress_({state_, direction, state_.scan_count, visited, state_.dynamic_count_this_scan});
        }
    }
    if (on_progress_ && config_.snapshot_every > 0 && visited % config_.snapshot_every != 0)
        on_progress_({state_, direction, state_.scan_count, visited, state_.dynamic_count_this_scan});
    return state_.dynamic_count_this_scan;
}

RunResult run(const ImageSet& set, const Config& config, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const auto seconds_since = [](auto t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Precomputed pre = precompute(set, config, options.precompute);
    spdlog::info("precompute finished in {:.2f}s", seconds_since(start));

    RunResult result;
    result.geometry = pre.geometry;
    Scanner scanner(set, std::move(pre), config);
    if (options.on_progress) scanner.set_progress_callback(options.on_progress);

    ScanDirection direction = ScanDirection::Down;
    while (result.scans < config.max_scans) {
        const auto scan_start = std::chrono::steady_clock::now();
        const long count = scanner.run_scan(direction);
        ++result.scans;
        result.dynamic_counts.push_back(count);
        spdlog::info("scan {} {} dynamic={} time={:.2f}s", result.scans, to_string(direction), count,
                     seconds_since(scan_start));
        if (count == 0) {
            result.converged = true;
            break;
        }
        direction = direction == ScanDirection::Down ? ScanDirection::Up : ScanDirection::Down;
    }
    if (!result.converged) spdlog::warn("not fully converged after {} scans", result.scans);

    result.dynamic_mask = scanner.state().dynamic.cumulative;
    result.cleaned = scanner.state().rgb;
    result.seconds = seconds_since(start);
    return result;
}

} // namespace dynclean
