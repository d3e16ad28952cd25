#pragma once

// Monte Carlo harness: power curves, p-value ECDFs and Sobel-statistic
// samples. Replicates are grouped into fixed-size chunks and every
// (grid point, chunk) pair owns an independently seeded generator, so output
// does not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "compnull/closed_form.hpp"
#include "compnull/error.hpp"
#include "compnull/pvalue.hpp"
#include "compnull/regions.hpp"

namespace compnull {

inline constexpr std::int64_t kSimChunk = 1024;

/// Worker count: COMPOSITE_NULL_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("COMPOSITE_NULL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return hw;
}

/// Generator for substream (stream, chunk) of a run seeded with `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
    return std::mt19937_64(seq);
}

/// Run task(i) for i in [0, count) on the worker pool.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task, unsigned workers = 0) {
    if (workers == 0) workers = worker_count();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next++; i < count; i = next++) task(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

enum class SimMethod { minimax, extended, bayes, js, sobel };

inline std::string_view to_string(SimMethod m) {
    switch (m) {
    case SimMethod::minimax: return "minimax";
    case SimMethod::extended: return "extended";
    case SimMethod::bayes: return "bayes";
    case SimMethod::js: return "js";
    case SimMethod::sobel: return "sobel";
    }
    return "?";
}

inline std::optional<SimMethod> sim_method_from_string(std::string_view s) {
    for (auto m : {SimMethod::minimax, SimMethod::extended, SimMethod::bayes, SimMethod::js, SimMethod::sobel})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

struct SimSpec {
    std::vector<SimMethod> methods{SimMethod::minimax, SimMethod::js};
    std::vector<std::pair<double, double>> delta_grid{{0.0, 0.0}};
    int n = 50;
    std::int64_t reps = 100000;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    /// Required when methods include bayes.
    std::shared_ptr<const RejectionRegion2D> bayes_region;
};

struct SimRow {
    double delta_x = 0.0;
    double delta_y = 0.0;
    SimMethod method = SimMethod::minimax;
    double alpha = 0.0;
    int n = 0;
    std::int64_t reps = 0;
    double reject_rate = 0.0;
    double mc_se = 0.0;
    std::uint64_t seed = 0;
};

struct SimResult {
    std::vector<SimRow> rows;

    const SimRow* find(SimMethod m, double dx, double dy) const {
        for (const auto& r : rows)
            if (r.method == m && r.delta_x == dx && r.delta_y == dy) return &r;
        return nullptr;
    }
};

namespace detail {

// Sample means and standard deviations of n bivariate N(delta, I) draws.
struct SampleSummary {
    double mean_x, mean_y, sd_x, sd_y;
};

inline SampleSummary draw_summary(std::mt19937_64& rng, std::normal_distribution<double>& norm, int n, double dx,
                                  double dy) {
    // Welford updates.
    double mx = 0.0, my = 0.0, sx = 0.0, sy = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double x = dx + norm(rng);
        const double y = dy + norm(rng);
        const double ex = x - mx, ey = y - my;
        mx += ex / i;
        my += ey / i;
        sx += ex * (x - mx);
        sy += ey * (y - my);
    }
    const double denom = n > 1 ? n - 1.0 : 1.0;
    return {mx, my, std::sqrt(sx / denom), std::sqrt(sy / denom)};
}

inline char* format_real(char* buf, std::size_t len, double v) {
    std::snprintf(buf, len, "%.10g", v);
    return buf;
}

} // namespace detail

inline SimResult simulate_power(const SimSpec& spec) {
    if (spec.reps < 1) throw InvalidArgument("simulate_power: reps must be at least 1");
    if (spec.n < 1) throw InvalidArgument("simulate_power: n must be at least 1");
    if (spec.delta_grid.empty()) throw InvalidArgument("simulate_power: empty delta grid");
    if (spec.methods.empty()) throw InvalidArgument("simulate_power: no methods selected");
    const auto a = AlphaSpec::from(spec.alpha);

    std::optional<RejectionRegion2D> minimax, extended;
    const RejectionRegion2D js = build_js_region(spec.alpha);
    for (auto m : spec.methods) {
        if (m == SimMethod::minimax && !minimax) minimax = build_minimax_region(a);
        if (m == SimMethod::extended && !extended) extended = build_extended_region(spec.alpha);
        if (m == SimMethod::bayes && !spec.bayes_region)
            throw InvalidArgument("simulate_power: the bayes method needs a region file");
    }

    const std::size_t n_methods = spec.methods.size();
    const auto n_chunks = static_cast<std::size_t>((spec.reps + kSimChunk - 1) / kSimChunk);
    const std::size_t n_tasks = spec.delta_grid.size() * n_chunks;
    std::vector<std::int64_t> counts(n_tasks * n_methods, 0);
    const double rn = std::sqrt(static_cast<double>(spec.n));

    parallel_for(n_tasks, [&](std::size_t task) {
        const std::size_t g = task / n_chunks, chunk = task % n_chunks;
        const auto [dx, dy] = spec.delta_grid[g];
        auto rng = substream(spec.seed, g, chunk);
        std::normal_distribution<double> norm;
        std::uniform_real_distribution<double> unif;
        const std::int64_t begin = static_cast<std::int64_t>(chunk) * kSimChunk;
        const std::int64_t end = std::min(spec.reps, begin + kSimChunk);
        std::int64_t* cnt = &counts[task * n_methods];
        for (std::int64_t r = begin; r < end; ++r) {
            const auto s = detail::draw_summary(rng, norm, spec.n, dx, dy);
            const double u = unif(rng);
            const double zx = rn * s.mean_x, zy = rn * s.mean_y;
            for (std::size_t k = 0; k < n_methods; ++k) {
                bool rej = false;
                switch (spec.methods[k]) {
                case SimMethod::minimax: rej = minimax->rejects(zx, zy, u); break;
                case SimMethod::extended: rej = extended->rejects(zx, zy, u); break;
                case SimMethod::bayes: rej = spec.bayes_region->rejects(zx, zy, u); break;
                case SimMethod::js: rej = js_test({zx, zy, std::nullopt}, spec.alpha).reject; break;
                case SimMethod::sobel:
                    rej = sobel_rejects(sobel_test({s.mean_x, s.mean_y, s.sd_x, s.sd_y, static_cast<double>(spec.n)}),
                                        spec.alpha);
                    break;
                }
                cnt[k] += rej ? 1 : 0;
            }
        }
    });

    SimResult out;
    for (std::size_t g = 0; g < spec.delta_grid.size(); ++g)
        for (std::size_t k = 0; k < n_methods; ++k) {
            std::int64_t total = 0;
            for (std::size_t c = 0; c < n_chunks; ++c) total += counts[(g * n_chunks + c) * n_methods + k];
            SimRow row;
            row.delta_x = spec.delta_grid[g].first;
            row.delta_y = spec.delta_grid[g].second;
            row.method = spec.methods[k];
            row.alpha = spec.alpha;
            row.n = spec.n;
            row.reps = spec.reps;
            row.reject_rate = static_cast<double>(total) / static_cast<double>(spec.reps);
            row.mc_se = std::sqrt(row.reject_rate * (1.0 - row.reject_rate) / static_cast<double>(spec.reps));
            row.seed = spec.seed;
            out.rows.push_back(row);
        }
    return out;
}

inline std::string power_csv(const SimResult& r) {
    std::string s = "delta_x,delta_y,method,alpha,n,reps,reject_rate,mc_se,seed\n";
    char a[32], b[32], c[32], d[32], e[32];
    for (const auto& row : r.rows) {
        char line[256];
        std::snprintf(line, sizeof line, "%s,%s,%s,%s,%d,%lld,%s,%s,%llu\n",
                      detail::format_real(a, sizeof a, row.delta_x), detail::format_real(b, sizeof b, row.delta_y),
                      std::string(to_string(row.method)).c_str(), detail::format_real(c, sizeof c, row.alpha), row.n,
                      static_cast<long long>(row.reps), detail::format_real(d, sizeof d, row.reject_rate),
                      detail::format_real(e, sizeof e, row.mc_se), static_cast<unsigned long long>(row.seed));
        s += line;
    }
    return s;
}

struct PvalueEcdf {
    /// Sorted p-values for each method, aligned with draw order in `draws`.
    std::vector<double> extended_minimax;
    std::vector<double> js;
    /// Per-draw (p_extended, p_js, p_js on the same alpha grid).
    struct Draw {
        double zx, zy, p_extended, p_js, p_js_grid;
    };
    std::vector<Draw> draws;
};

/// Draw Z ~ N(delta*, I) `reps` times and record both p-values.
inline PvalueEcdf simulate_pvalue_ecdf(std::int64_t reps, std::pair<double, double> delta_star, int resolution,
                                      std::uint64_t seed) {
    if (reps < 1) throw InvalidArgument("simulate_pvalue_ecdf: reps must be at least 1");
    const auto family = extended_family(resolution);
    PvalueEcdf out;
    out.draws.resize(static_cast<std::size_t>(reps));
    const auto n_chunks = static_cast<std::size_t>((reps + kSimChunk - 1) / kSimChunk);
    parallel_for(n_chunks, [&](std::size_t chunk) {
        auto rng = substream(seed, 0, chunk);
        std::normal_distribution<double> norm;
        const std::int64_t begin = static_cast<std::int64_t>(chunk) * kSimChunk;
        const std::int64_t end = std::min(reps, begin + kSimChunk);
        for (std::int64_t r = begin; r < end; ++r) {
            const double zx = delta_star.first + norm(rng);
            const double zy = delta_star.second + norm(rng);
            const TestStatisticPair z{zx, zy, std::nullopt};
            out.draws[static_cast<std::size_t>(r)] = {zx, zy, family->pvalue(zx, zy).p, js_pvalue(z).p,
                                                      js_pvalue_on_grid(z, resolution).p};
        }
    });
    for (const auto& d : out.draws) {
        out.extended_minimax.push_back(d.p_extended);
        out.js.push_back(d.p_js);
    }
    std::sort(out.extended_minimax.begin(), out.extended_minimax.end());
    std::sort(out.js.begin(), out.js.end());
    return out;
}

/// Empirical cdf of a sorted sample evaluated at x.
inline double ecdf_at(const std::vector<double>& sorted, double x) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
           static_cast<double>(sorted.size());
}

inline std::string ecdf_csv(const PvalueEcdf& e) {
    std::string s = "method,p_value,ecdf\n";
    char a[32], b[32];
    const auto emit = [&](const char* name, const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += name;
            s += ',';
            s += detail::format_real(a, sizeof a, v[i]);
            s += ',';
            s += detail::format_real(b, sizeof b, static_cast<double>(i + 1) / static_cast<double>(v.size()));
            s += '\n';
        }
    };
    emit("extended_minimax", e.extended_minimax);
    emit("js", e.js);
    return s;
}

struct SobelDensitySample {
    double delta_x = 0.0;
    /// Sobel statistic Z_n.
    std::vector<double> z;
    /// n * mean_x * mean_y / (s_x * s_y), whose limit at the origin is a product of two normals.
    std::vector<double> product;
};

/// Sobel statistics from n-sample means and sample SDs, with delta_y = 0.
inline std::vector<SobelDensitySample> sample_sobel_density(const std::vector<double>& delta_x_list, int n,
                                                            std::int64_t reps, std::uint64_t seed) {
    if (n < 2) throw InvalidArgument("sample_sobel_density: n must be at least 2");
    if (reps < 1) throw InvalidArgument("sample_sobel_density: reps must be at least 1");
    std::vector<SobelDensitySample> out(delta_x_list.size());
    const auto n_chunks = static_cast<std::size_t>((reps + kSimChunk - 1) / kSimChunk);
    for (std::size_t g = 0; g < out.size(); ++g) {
        out[g].delta_x = delta_x_list[g];
        out[g].z.resize(static_cast<std::size_t>(reps));
        out[g].product.resize(static_cast<std::size_t>(reps));
    }
    parallel_for(out.size() * n_chunks, [&](std::size_t task) {
        const std::size_t g = task / n_chunks, chunk = task % n_chunks;
        auto rng = substream(seed, g, chunk);
        std::normal_distribution<double> norm;
        const std::int64_t begin = static_cast<std::int64_t>(chunk) * kSimChunk;
        const std::int64_t end = std::min(reps, begin + kSimChunk);
        for (std::int64_t r = begin; r < end; ++r) {
            const auto s = detail::draw_summary(rng, norm, n, delta_x_list[g], 0.0);
            out[g].z[static_cast<std::size_t>(r)] =
                sobel_test({s.mean_x, s.mean_y, s.sd_x, s.sd_y, static_cast<double>(n)}).z;
            out[g].product[static_cast<std::size_t>(r)] = n * s.mean_x * s.mean_y / (s.sd_x * s.sd_y);
        }
    });
    return out;
}

inline std::string density_csv(const std::vector<SobelDensitySample>& samples) {
    std::string s = "delta_x,sample\n";
    char a[32], b[32];
    for (const auto& g : samples)
        for (double v : g.z) {
            s += detail::format_real(a, sizeof a, g.delta_x);
            s += ',';
            s += detail::format_real(b, sizeof b, v);
            s += '\n';
        }
    return s;
}

} // namespace compnull
