#include "kslab/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "kslab/geometry.hpp"
#include "kslab/harness.hpp"

namespace fs = std::filesystem;

namespace kslab {

using json = nlohmann::ordered_json;

namespace {

CriterionOutcome outcome(const std::string &status, const std::string &detail) {
    return {"", status, detail};
}

std::string g(double v) { return format_g17(v); }

std::vector<RPath> paths_of(const std::vector<TrajectoryRecord> &records) {
    std::vector<RPath> out;
    out.reserve(records.size());
    for (const auto &rec : records) out.push_back(r_path(rec));
    return out;
}

} // namespace

CriterionOutcome check_drift_slope(const std::vector<RPath> &paths, double theta, int n,
                                   const std::string &label) {
    const auto est = bessel_drift_test(paths, theta, n);
    const double target = (n - 1) * (2.0 - theta);
    const double rel = std::fabs(est.slope - target) / std::fabs(target);
    const bool ok = rel <= 0.10;
    return outcome(ok ? "pass" : "fail",
                   label + ": slope=" + g(est.slope) + " target=" + g(target) +
                       " rel_err=" + g(rel) + " se=" + g(est.std_error));
}

CriterionOutcome check_zero_drift(const std::vector<RPath> &paths, double theta, int n,
                                  const std::string &label) {
    const auto est = bessel_drift_test(paths, theta, n);
    const bool ok = std::fabs(est.slope) <= 3.0 * est.std_error;
    return outcome(ok ? "pass" : "fail", label + ": slope=" + g(est.slope) +
                                             " se=" + g(est.std_error) + " bound=3se");
}

CriterionOutcome check_qv_rate(const std::vector<RPath> &paths, const std::string &label) {
    const auto est = bessel_qv_test(paths);
    const bool ok = est.slope >= 0.85 && est.slope <= 1.15;
    return outcome(ok ? "pass" : "fail",
                   label + ": qv_slope=" + g(est.slope) + " band=[0.85,1.15]");
}

CriterionOutcome check_dimension_combinatorics() {
    long long bad_k2 = 0, bad_sym = 0, bad_float = 0;
    for (int n = 5; n <= 10000; ++n) {
        // d(k) < 2 at the critical coupling iff (k-1)(n-k) < n, all integers
        int k2 = -1;
        for (int k = 3; k <= n; ++k)
            if (static_cast<long long>(k - 1) * (n - k) < n) {
                k2 = k;
                break;
            }
        if (k2 != n - 2 && k2 != n - 1) ++bad_k2;
        for (int k = 2; k <= n; ++k) {
            const int kr = n + 1 - k; // reflected index
            const long long p = static_cast<long long>(k - 1) * (n - k);
            const long long q = static_cast<long long>(kr - 1) * (n - kr);
            if (p != q) ++bad_sym;
        }
        // tie the integer oracle to the floating-point table on a subset
        if (n <= 64 || n % 997 == 0) {
            const auto table = dimension_table(2.0, n);
            if (table.k2 != k2) ++bad_float;
            if (table.at(n) != 0.0) ++bad_float;
            for (int k = 2; k <= n; ++k) {
                const double expect = 2.0 * static_cast<double>(k - 1) *
                                      static_cast<double>(n - k) / static_cast<double>(n);
                if (std::fabs(table.at(k) - expect) > 1e-12 * (1.0 + expect)) ++bad_float;
            }
        }
    }
    const bool ok = bad_k2 == 0 && bad_sym == 0 && bad_float == 0;
    return outcome(ok ? "pass" : "fail",
                   "n in [5,10000]: k2_violations=" + std::to_string(bad_k2) +
                       " symmetry_violations=" + std::to_string(bad_sym) +
                       " table_mismatches=" + std::to_string(bad_float));
}

CriterionOutcome check_barycentre_inequality(long long triples, std::uint64_t seed) {
    const MonotoneFn prof_l{[](double r) { return l_function(r * r); }, true};
    const MonotoneFn prof_k{[](double r) { return 1.0 / (r * r); }, true};
    const MonotoneFn prof_e{[](double r) { return std::exp(-r); }, true};
    const MonotoneFn prof_c{[](double r) { return 1.0 / (1.0 + r); }, true};
    const std::pair<const MonotoneFn *, const MonotoneFn *> pairs[4] = {
        {&prof_l, &prof_k}, {&prof_l, &prof_l}, {&prof_e, &prof_c}, {&prof_k, &prof_c}};

    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);

    long long violations = 0, checked = 0;
    double worst = 0.0;
    for (long long i = 0; i < triples; ++i) {
        const double scale = std::pow(10.0, unif(eng));
        const Vec2 x{scale * gauss(eng), scale * gauss(eng)};
        const Vec2 y{scale * gauss(eng), scale * gauss(eng)};
        const Vec2 z{-x.x - y.x, -x.y - y.y};
        if (x.norm2() == 0.0 || y.norm2() == 0.0 || z.norm2() == 0.0) continue;
        for (const auto &[phi, psi] : pairs) {
            const auto gap = barycentre_gap(x, y, z, *phi, *psi);
            ++checked;
            const double ref =
                std::max({std::fabs(gap.delta), std::fabs(gap.lower_bound), 1e-300});
            const double slack1 = (gap.lower_bound - gap.delta) / ref;
            const double slack2 = -gap.lower_bound / ref;
            worst = std::max({worst, slack1, slack2});
            if (slack1 > 1e-9 || slack2 > 1e-9) ++violations;
        }
    }
    const bool ok = violations == 0;
    return outcome(ok ? "pass" : "fail",
                   std::to_string(checked) + " checks, violations=" +
                       std::to_string(violations) + " worst_rel_slack=" + g(worst));
}

CriterionOutcome check_moment_bound(const std::vector<MomentCell> &cells, double gamma) {
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0, growth = 0.0;
    std::string vals;
    for (const auto &c : cells) {
        vmin = std::min(vmin, c.full);
        vmax = std::max(vmax, c.full);
        if (c.half > 0.0) growth = std::max(growth, c.full / c.half);
        if (!vals.empty()) vals += " ";
        vals += "n=" + std::to_string(c.n) + ":" + g(c.full);
    }
    const double spread = vmin > 0.0 ? vmax / vmin : std::numeric_limits<double>::infinity();
    const bool ok = spread <= 1.5 && growth <= 2.5;
    return outcome(ok ? "pass" : "fail", "gamma=" + g(gamma) + " " + vals +
                                             " spread=" + g(spread) +
                                             " growth_ratio=" + g(growth) +
                                             " bounds=[1.5,2.5]");
}

CriterionOutcome check_phase_split(int super_hits, int super_total, int sub_hits,
                                   int sub_total) {
    if (super_total == 0 && sub_total == 0) return outcome("not_applicable", "no runs in scope");
    bool ok = true;
    std::string detail;
    if (super_total > 0) {
        const double frac = static_cast<double>(super_hits) / super_total;
        ok = ok && frac >= 0.99 - 1e-12;
        detail += "supercritical collapse " + std::to_string(super_hits) + "/" +
                  std::to_string(super_total);
    }
    if (sub_total > 0) {
        const double frac = static_cast<double>(sub_total - sub_hits) / sub_total;
        ok = ok && frac >= 0.99 - 1e-12;
        if (!detail.empty()) detail += ", ";
        detail += "subcritical survival " + std::to_string(sub_total - sub_hits) + "/" +
                  std::to_string(sub_total);
    }
    return outcome(ok ? "pass" : "fail", detail + " (required: >= 99%)");
}

CriterionOutcome check_explosion_divergence(const std::vector<ExplosionGroup> &groups,
                                            const std::string &label) {
    const auto sum = explosion_time_summary(groups);
    bool strict = true;
    std::string meds, ps;
    for (std::size_t i = 0; i < sum.rows.size(); ++i) {
        if (i + 1 < sum.rows.size())
            strict = strict && sum.rows[i].median < sum.rows[i + 1].median;
        if (!meds.empty()) meds += " ";
        meds += "n=" + std::to_string(sum.rows[i].n) + ":" + g(sum.rows[i].median);
    }
    bool p_ok = !sum.p_adjacent.empty();
    for (double p : sum.p_adjacent) {
        p_ok = p_ok && p < 0.05;
        if (!ps.empty()) ps += " ";
        ps += g(p);
    }
    const bool ok = strict && p_ok;
    return outcome(ok ? "pass" : "fail",
                   label + ": medians " + meds + " strictly_increasing=" +
                       (strict ? "yes" : "no") + " p=[" + ps + "] threshold=0.05");
}

CriterionOutcome check_residual_scaling(const ResidualSample &lo, const ResidualSample &hi,
                                        bool constant_zero) {
    const double ratio = lo.rms > 0.0 ? hi.rms / lo.rms : std::numeric_limits<double>::infinity();
    const bool ok = constant_zero && ratio <= 0.6;
    return outcome(ok ? "pass" : "fail",
                   "rms(n=" + std::to_string(lo.n) + ")=" + g(lo.rms) + " rms(n=" +
                       std::to_string(hi.n) + ")=" + g(hi.rms) + " ratio=" + g(ratio) +
                       " bound=0.6 constant_zero=" + (constant_zero ? "yes" : "no"));
}

CriterionOutcome check_bessel_dichotomy(int replicas, std::uint64_t seed) {
    BesselConfig cfg;
    cfg.z0 = 1.0;
    cfg.horizon = 5.0;
    cfg.dt = 1e-4;
    cfg.dimension = 3.0;
    const double frac3 = zero_hitting_fraction(cfg, replicas, derive_seed(seed, 1));
    cfg.dimension = 1.0;
    const double frac1 = zero_hitting_fraction(cfg, replicas, derive_seed(seed, 2));
    const bool ok = frac3 <= 0.02 && frac1 >= 0.5;
    return outcome(ok ? "pass" : "fail", "hit_fraction(d=3)=" + g(frac3) +
                                             " (<=0.02), hit_fraction(d=1)=" + g(frac1) +
                                             " (>=0.5), replicas=" + std::to_string(replicas));
}

CriterionOutcome check_centroid(const std::vector<double> &sq_displacements, double horizon,
                                int n) {
    double mean = 0.0;
    for (double v : sq_displacements) mean += v;
    mean /= static_cast<double>(sq_displacements.size());
    const double target = 2.0 * horizon / static_cast<double>(n);
    const double rel = std::fabs(mean - target) / target;
    const bool ok = rel <= 0.10;
    return outcome(ok ? "pass" : "fail",
                   "msd=" + g(mean) + " target=" + g(target) + " rel_err=" + g(rel) +
                       " replicas=" + std::to_string(sq_displacements.size()));
}

CriterionOutcome check_determinism_resim(const LoadedRun &run) {
    if (run.records.empty()) return outcome("not_applicable", "no replicas");
    const auto &stored = run.records.front();
    const auto fresh = simulate(run.spec.cfg, run.spec.cfg.law, run.spec.cfg.detectors,
                                stored.seed);
    bool same = fresh.snapshots.size() == stored.snapshots.size() &&
                fresh.collapsed == stored.collapsed &&
                fresh.collapse_time == stored.collapse_time &&
                fresh.events.size() == stored.events.size();
    for (std::size_t k = 0; same && k < fresh.snapshots.size(); ++k) {
        same = fresh.snapshots[k].t == stored.snapshots[k].t &&
               fresh.snapshots[k].positions.size() == stored.snapshots[k].positions.size();
        for (std::size_t i = 0; same && i < fresh.snapshots[k].positions.size(); ++i)
            same = fresh.snapshots[k].positions[i] == stored.snapshots[k].positions[i];
    }
    for (std::size_t e = 0; same && e < fresh.events.size(); ++e)
        same = fresh.events[e].t == stored.events[e].t &&
               fresh.events[e].kind == stored.events[e].kind &&
               fresh.events[e].value == stored.events[e].value;
    return outcome(same ? "pass" : "fail",
                   same ? "replica 0 re-simulated bitwise-identically"
                        : "replica 0 re-simulation diverged from the stored record");
}

bool constant_residual_is_zero(const TrajectoryRecord &record) {
    C2Function constant;
    constant.value = [](const Vec2 &) { return 1.0; };
    constant.gradient = [](const Vec2 &) { return Vec2{0.0, 0.0}; };
    constant.laplacian = [](const Vec2 &) { return 0.0; };
    std::vector<double> times;
    for (const auto &s : record.snapshots) times.push_back(s.t);
    const auto res = weak_solution_residual(record, constant, times);
    for (double v : res.series.v)
        if (v != 0.0) return false;
    return true;
}

double residual_rms_final(const std::vector<TrajectoryRecord> &records) {
    const C2Function phi = as_c2(shared_family().terms.at(1));
    double acc = 0.0;
    for (const auto &rec : records) {
        std::vector<double> times;
        for (const auto &s : rec.snapshots) times.push_back(s.t);
        const auto res = weak_solution_residual(rec, phi, times);
        const double r = res.series.v.back();
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(records.size()));
}

namespace {

// Run dirs under p: p itself, the ok cells of a sweep at p, or any of
// those one level down.  Children are visited in name order so the
// verify report is stable.
void collect_into(const fs::path &p, bool descend, std::vector<std::string> &dirs) {
    if (fs::exists(p / "metadata.json")) {
        dirs.push_back(p.string());
        return;
    }
    if (fs::exists(p / "sweep.json")) {
        json doc;
        std::ifstream in(p / "sweep.json", std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + (p / "sweep.json").string());
        try {
            in >> doc;
        } catch (const json::exception &e) {
            throw std::runtime_error("bad sweep.json: " + std::string(e.what()));
        }
        for (const auto &cell : doc.at("cells"))
            if (cell.at("status").get<std::string>() == "ok")
                dirs.push_back((p / cell.at("dir").get<std::string>()).string());
        return;
    }
    if (!descend) return;
    std::vector<fs::path> children;
    for (const auto &entry : fs::directory_iterator(p))
        if (entry.is_directory()) children.push_back(entry.path());
    std::sort(children.begin(), children.end());
    for (const auto &child : children) collect_into(child, false, dirs);
}

} // namespace

std::vector<std::string> collect_run_dirs(const std::string &root) {
    if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root);
    std::vector<std::string> dirs;
    collect_into(fs::path(root), true, dirs);
    if (dirs.empty())
        throw std::runtime_error("no run artifacts under " + root +
                                 " (expected metadata.json or sweep.json)");
    return dirs;
}

namespace {

struct Joined {
    bool any = false;
    bool all_pass = true;
    std::string detail;
    void add(const CriterionOutcome &o) {
        any = true;
        all_pass = all_pass && o.status == "pass";
        if (!detail.empty()) detail += "; ";
        detail += o.detail;
    }
    CriterionOutcome result(const std::string &na_detail) const {
        if (!any) return {"", "not_applicable", na_detail};
        return {"", all_pass ? "pass" : "fail", detail};
    }
};

std::string run_label(const LoadedRun &run) {
    return "theta=" + format_g17(run.spec.cfg.theta) + " n=" + std::to_string(run.spec.cfg.n);
}

} // namespace

VerifyReport evaluate_criteria(const std::vector<LoadedRun> &runs) {
    VerifyReport rep;
    auto add = [&](const std::string &id, CriterionOutcome o) {
        o.id = id;
        if (o.status != "not_applicable") {
            ++rep.evaluated;
            if (o.status == "fail") ++rep.failed;
        }
        rep.outcomes.push_back(std::move(o));
    };

    {
        Joined j;
        for (const auto &run : runs)
            if (run.spec.cfg.theta < 2.0 && run.records.size() >= 30)
                j.add(check_drift_slope(paths_of(run.records), run.spec.cfg.theta,
                                        run.spec.cfg.n, run_label(run)));
        add("dispersion-drift", j.result("no subcritical runs with >= 30 replicas"));
    }
    {
        Joined j;
        for (const auto &run : runs)
            if (run.spec.cfg.theta == 2.0 && run.records.size() >= 30)
                j.add(check_zero_drift(paths_of(run.records), run.spec.cfg.theta,
                                       run.spec.cfg.n, run_label(run)));
        add("critical-zero-drift", j.result("no critical runs with >= 30 replicas"));
    }
    {
        Joined j;
        for (const auto &run : runs)
            if (run.records.size() >= 30)
                j.add(check_qv_rate(paths_of(run.records), run_label(run)));
        add("qv-rate", j.result("no runs with >= 30 replicas"));
    }
    add("dimension-combinatorics", check_dimension_combinatorics());
    add("barycentre-inequality", check_barycentre_inequality(100000, 9001));

    {
        // population grids sharing theta and horizon with a usable exponent
        std::map<double, std::vector<const LoadedRun *>> by_theta;
        for (const auto &run : runs)
            if (run.records.size() >= 30) by_theta[run.spec.cfg.theta].push_back(&run);
        Joined j;
        for (auto &[theta, group] : by_theta) {
            if (group.size() < 2) continue;
            const double gamma = group.front()->spec.diag.moment_gamma;
            if (!(gamma > theta && gamma < 2.0)) continue;
            const double horizon = group.front()->spec.cfg.horizon;
            bool consistent = true;
            for (const auto *run : group)
                consistent = consistent && run->spec.cfg.horizon == horizon &&
                             run->spec.diag.moment_gamma == gamma;
            if (!consistent) continue;
            std::sort(group.begin(), group.end(), [](const LoadedRun *a, const LoadedRun *b) {
                return a->spec.cfg.n < b->spec.cfg.n;
            });
            std::vector<MomentCell> cells;
            for (const auto *run : group) {
                MomentCell c;
                c.n = run->spec.cfg.n;
                c.full = pair_moment_integral(run->records, gamma, horizon).value;
                c.half = pair_moment_integral(run->records, gamma, horizon / 2.0).value;
                cells.push_back(c);
            }
            j.add(check_moment_bound(cells, gamma));
        }
        add("pair-moment-bound", j.result("no population grid with a moment exponent in scope"));
    }

    {
        int super_hits = 0, super_total = 0, sub_hits = 0, sub_total = 0;
        for (const auto &run : runs) {
            if (run.records.size() < 100) continue;
            bool k3 = false, k3_fine = false;
            for (const auto &det : run.spec.cfg.detectors) {
                k3 |= det.k == 3;
                k3_fine |= det.k == 3 && det.ell >= 1e6;
            }
            if (run.spec.cfg.theta > 2.0 && k3) {
                for (const auto &rec : run.records) {
                    ++super_total;
                    super_hits += rec.collapsed ? 1 : 0;
                }
            } else if (run.spec.cfg.theta < 2.0 && k3_fine) {
                for (const auto &rec : run.records) {
                    ++sub_total;
                    sub_hits += rec.collapsed ? 1 : 0;
                }
            }
        }
        add("phase-classification",
            check_phase_split(super_hits, super_total, sub_hits, sub_total));
    }

    {
        std::map<double, std::vector<const LoadedRun *>> by_theta;
        for (const auto &run : runs) {
            bool k3 = false;
            for (const auto &det : run.spec.cfg.detectors) k3 |= det.k == 3;
            if (run.spec.cfg.theta == 2.0 && k3 && run.records.size() >= 50)
                by_theta[2.0].push_back(&run);
        }
        Joined j;
        for (auto &[theta, group] : by_theta) {
            std::sort(group.begin(), group.end(), [](const LoadedRun *a, const LoadedRun *b) {
                return a->spec.cfg.n < b->spec.cfg.n;
            });
            bool strict = group.size() >= 2;
            for (std::size_t i = 0; i + 1 < group.size(); ++i)
                strict = strict && group[i]->spec.cfg.n < group[i + 1]->spec.cfg.n;
            if (!strict) continue;
            std::vector<ExplosionGroup> groups;
            for (const auto *run : group) {
                ExplosionGroup eg;
                eg.n = run->spec.cfg.n;
                eg.single_atom_law = run->spec.cfg.law.kind == LawKind::AtomPlusJitter &&
                                     run->spec.cfg.law.atoms.size() == 1;
                for (const auto &rec : run->records)
                    eg.taus.push_back(rec.collapsed ? std::optional<double>(rec.collapse_time)
                                                    : std::nullopt);
                groups.push_back(std::move(eg));
            }
            j.add(check_explosion_divergence(groups, "theta=2"));
        }
        add("explosion-divergence",
            j.result("no critical population grid with >= 50 replicas per cell"));
    }

    {
        std::map<double, std::vector<const LoadedRun *>> by_theta;
        for (const auto &run : runs)
            if (run.records.size() >= 30) by_theta[run.spec.cfg.theta].push_back(&run);
        CriterionOutcome picked{"", "not_applicable",
                                "no pair of runs with a 4x population ratio"};
        bool found = false;
        for (auto &[theta, group] : by_theta) {
            for (const auto *lo : group) {
                for (const auto *hi : group) {
                    if (found || hi->spec.cfg.n != 4 * lo->spec.cfg.n) continue;
                    if (hi->spec.cfg.horizon != lo->spec.cfg.horizon) continue;
                    ResidualSample slo{lo->spec.cfg.n, residual_rms_final(lo->records)};
                    ResidualSample shi{hi->spec.cfg.n, residual_rms_final(hi->records)};
                    const bool zero = constant_residual_is_zero(lo->records.front());
                    picked = check_residual_scaling(slo, shi, zero);
                    found = true;
                }
            }
        }
        add("residual-scaling", picked);
    }

    add("bessel-dichotomy", check_bessel_dichotomy(500, 7100));

    {
        Joined j;
        for (const auto &run : runs) {
            if (run.records.size() < 300) continue;
            bool clean = true;
            for (const auto &rec : run.records) clean = clean && !rec.collapsed;
            if (!clean) continue;
            std::vector<double> sq;
            for (const auto &rec : run.records) {
                const auto &first = rec.snapshots.front().positions;
                const auto &last = rec.snapshots.back().positions;
                Vec2 s0{0.0, 0.0}, s1{0.0, 0.0};
                for (const auto &p : first) s0 += p;
                for (const auto &p : last) s1 += p;
                const double inv = 1.0 / static_cast<double>(first.size());
                const Vec2 d = s1 * inv - s0 * inv;
                sq.push_back(d.norm2());
            }
            j.add(check_centroid(sq, run.spec.cfg.horizon, run.spec.cfg.n));
        }
        add("centroid-conservation",
            j.result("no collapse-free runs with >= 300 replicas"));
    }

    if (!runs.empty())
        add("determinism", check_determinism_resim(runs.front()));
    else
        add("determinism", {"", "not_applicable", "no runs loaded"});

    return rep;
}

VerifyReport verify_root(const std::string &root) {
    const auto dirs = collect_run_dirs(root);

    VerifyReport rep;
    std::string bad;
    for (const auto &dir : dirs)
        for (const auto &rel : checksum_mismatches(dir)) {
            if (!bad.empty()) bad += ", ";
            bad += dir + "/" + rel;
        }
    CriterionOutcome integrity{"integrity", bad.empty() ? "pass" : "fail",
                               bad.empty()
                                   ? std::to_string(dirs.size()) + " run dir(s), all " +
                                         "checksums match"
                                   : "checksum mismatch: " + bad};
    rep.outcomes.push_back(integrity);
    ++rep.evaluated;
    if (integrity.status == "fail") {
        // corrupt artifacts: stop at the integrity verdict instead of feeding
        // unreliable bytes (possibly unparseable) to the estimators
        ++rep.failed;
        return rep;
    }

    std::vector<LoadedRun> runs;
    for (const auto &dir : dirs) runs.push_back(read_run_dir(dir));
    auto crit = evaluate_criteria(runs);
    for (auto &o : crit.outcomes) rep.outcomes.push_back(std::move(o));
    rep.evaluated += crit.evaluated;
    rep.failed += crit.failed;
    return rep;
}

int cmd_verify(const std::string &root, std::ostream &out, std::ostream &err) {
    try {
        const auto rep = verify_root(root);

        json doc;
        doc["format"] = "kslab-verify/1";
        doc["version"] = kVersion;
        doc["evaluated"] = rep.evaluated;
        doc["failed"] = rep.failed;
        doc["criteria"] = json::array();
        for (const auto &o : rep.outcomes) {
            json c;
            c["id"] = o.id;
            c["status"] = o.status;
            c["detail"] = o.detail;
            doc["criteria"].push_back(c);
        }
        out << doc.dump(2) << "\n";
        {
            std::ofstream f(fs::path(root) / "verify.json", std::ios::binary);
            if (f) f << doc.dump(2) << "\n";
        }
        return rep.failed > 0 ? 3 : 0;
    } catch (const std::invalid_argument &e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace kslab
