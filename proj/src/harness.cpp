#include "kslab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace fs = std::filesystem;

namespace kslab {

using json = nlohmann::ordered_json;

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replica) {
    return derive_seed(master, cell, replica);
}

std::vector<TrajectoryRecord> simulate_replicas(const RunSpec &spec, std::uint64_t cell_index) {
    const SimConfig &cfg = spec.cfg;
    validate(cfg);
    std::vector<TrajectoryRecord> out(static_cast<std::size_t>(cfg.replicas));

    int workers = spec.parallelism > 0 ? spec.parallelism
                                       : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, cfg.replicas);

    std::atomic<int> next{0};
    std::mutex err_mx;
    std::exception_ptr first_err;
    auto work = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= cfg.replicas) return;
            try {
                out[static_cast<std::size_t>(r)] =
                    simulate(cfg, cfg.law, cfg.detectors,
                             replica_seed(cfg.master_seed, cell_index,
                                          static_cast<std::uint64_t>(r)));
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mx);
                if (!first_err) first_err = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto &t : pool) t.join();
    }
    if (first_err) std::rethrow_exception(first_err);
    return out;
}

const TestFunctionFamily &shared_family() {
    static const TestFunctionFamily family = make_test_family(kFamilyTerms);
    return family;
}

namespace {

double mean_of(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double> &v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) /
                     static_cast<double>(v.size()));
}

// median with censored entries encoded as +inf; +inf result means fewer than
// half of the entries are finite
double censored_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    if (m == 0) return std::numeric_limits<double>::infinity();
    if (m % 2 == 1) return v[m / 2];
    const double a = v[m / 2 - 1], b = v[m / 2];
    if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
    return 0.5 * (a + b);
}

bool selected(const DiagnosticsSelect &d, const char *name) {
    return std::find(d.select.begin(), d.select.end(), name) != d.select.end();
}

std::string window_full(double horizon) { return "[0," + format_g17(horizon) + "]"; }

} // namespace

DiagnosticsReport run_diagnostics(const RunSpec &spec,
                                  const std::vector<TrajectoryRecord> &records) {
    const SimConfig &cfg = spec.cfg;
    const DiagnosticsSelect &d = spec.diag;
    DiagnosticsReport report;
    if (records.empty()) return report;

    const int m = static_cast<int>(records.size());
    std::size_t common = records.front().snapshots.size();
    for (const auto &rec : records) common = std::min(common, rec.snapshots.size());
    const std::string win = window_full(cfg.horizon);
    const std::string win_stopped = win + " stopped";

    auto push = [&](const std::string &name, double value, double se, long long n,
                    const std::string &window) {
        report.estimates.push_back({name, value, se, n, window});
    };

    if (selected(d, "dispersion")) {
        Series s;
        std::vector<double> finals;
        for (std::size_t k = 0; k < common; ++k) {
            double acc = 0.0;
            for (const auto &rec : records) {
                Cluster all(static_cast<std::size_t>(rec.n));
                for (int i = 0; i < rec.n; ++i) all[static_cast<std::size_t>(i)] = i;
                acc += cluster_dispersion(rec.snapshots[k].positions, all);
            }
            s.t.push_back(records.front().snapshots[k].t);
            s.v.push_back(acc / m);
        }
        for (const auto &rec : records) {
            Cluster all(static_cast<std::size_t>(rec.n));
            for (int i = 0; i < rec.n; ++i) all[static_cast<std::size_t>(i)] = i;
            finals.push_back(cluster_dispersion(rec.snapshots[common - 1].positions, all));
        }
        const double mu = mean_of(finals);
        push("dispersion_final", mu, stderr_of(finals, mu), m, win);
        report.series.push_back({"mean_dispersion", std::move(s)});
    }

    if (selected(d, "collapse")) {
        int hits = 0;
        std::vector<double> taus;
        for (const auto &rec : records) {
            if (rec.collapsed) {
                ++hits;
                taus.push_back(rec.collapse_time);
            } else {
                taus.push_back(std::numeric_limits<double>::infinity());
            }
        }
        const double p = static_cast<double>(hits) / m;
        push("collapse_fraction", p, std::sqrt(std::max(0.0, p * (1.0 - p)) / m), m, win);
        const double med = censored_median(taus);
        if (std::isfinite(med)) push("collapse_time_median", med, 0.0, m, win);
    }

    if (selected(d, "drift") && m >= 30) {
        std::vector<RPath> paths;
        for (const auto &rec : records) paths.push_back(r_path(rec));
        const auto est = bessel_drift_test(paths, cfg.theta, cfg.n);
        push("dispersion_drift_slope", est.slope, est.std_error, est.n_samples, win_stopped);
        push("dispersion_drift_target", (cfg.n - 1) * (2.0 - cfg.theta), 0.0, 0, "exact");
    }

    if (selected(d, "qv")) {
        std::vector<RPath> paths;
        for (const auto &rec : records) paths.push_back(r_path(rec));
        const auto est = bessel_qv_test(paths);
        push("qv_slope", est.slope, est.std_error, est.n_samples, win_stopped);
    }

    if (selected(d, "variance") && m >= 30) {
        const auto est = variance_drift_test(records);
        push("variance_drift_slope", est.slope, est.std_error, est.n_samples, win_stopped);
        push("variance_drift_target",
             (1.0 - 1.0 / cfg.n) * (2.0 - cfg.theta), 0.0, 0, "exact");
    }

    if (selected(d, "moment")) {
        std::vector<double> vals;
        for (const auto &rec : records)
            vals.push_back(pair_moment_integral({rec}, d.moment_gamma, cfg.horizon).value);
        const double mu = mean_of(vals);
        push("pair_moment_integral", mu, stderr_of(vals, mu), m,
             "gamma=" + format_g17(d.moment_gamma) + " " + win_stopped);
    }

    if (selected(d, "triples")) {
        Series s;
        long long exceed = 0;
        std::vector<GMonitor> mons;
        for (int r = 0; r < m; ++r) {
            mons.push_back(g_functional_monitor(records[static_cast<std::size_t>(r)],
                                                d.triple_budget,
                                                derive_seed(cfg.master_seed, 3,
                                                            static_cast<std::uint64_t>(r))));
            for (long long c : mons.back().exceedances) exceed += c;
        }
        for (std::size_t k = 0; k < common; ++k) {
            double acc = 0.0;
            for (const auto &mon : mons) acc += mon.avg.v[k];
            s.t.push_back(records.front().snapshots[k].t);
            s.v.push_back(acc / m);
        }
        push("triple_exceedances", static_cast<double>(exceed), 0.0, m, win);
        report.series.push_back({"triple_avg", std::move(s)});
    }

    if (selected(d, "residual")) {
        const C2Function phi = as_c2(shared_family().terms.at(
            static_cast<std::size_t>(d.residual_term)));
        Series s;
        std::vector<std::vector<double>> per_rec;
        bool coarse = false;
        for (const auto &rec : records) {
            std::vector<double> times;
            for (std::size_t k = 0; k < common; ++k) times.push_back(rec.snapshots[k].t);
            const auto res = weak_solution_residual(rec, phi, times);
            coarse = coarse || res.coarse_quadrature;
            per_rec.push_back(res.series.v);
        }
        std::vector<double> final_sq;
        for (const auto &v : per_rec) final_sq.push_back(v.back() * v.back());
        for (std::size_t k = 0; k < common; ++k) {
            double acc = 0.0;
            for (const auto &v : per_rec) acc += std::fabs(v[k]);
            s.t.push_back(records.front().snapshots[k].t);
            s.v.push_back(acc / m);
        }
        const double msq = mean_of(final_sq);
        const double rms = std::sqrt(msq);
        const double se = rms > 0.0 ? stderr_of(final_sq, msq) / (2.0 * rms) : 0.0;
        push("residual_final_rms", rms, se, m, coarse ? win + " coarse" : win);
        report.series.push_back({"residual_abs_mean", std::move(s)});
    }

    if (selected(d, "holder")) {
        std::vector<double> mods;
        for (const auto &rec : records) {
            std::vector<std::pair<double, EmpiricalMeasure>> path;
            for (std::size_t k = 0; k < common; ++k)
                path.push_back({rec.snapshots[k].t, measure_of(rec.snapshots[k].positions)});
            mods.push_back(holder_modulus(path, shared_family(), kFamilyTerms, d.holder_exponent));
        }
        const double mu = mean_of(mods);
        push("holder_modulus_mean", mu, stderr_of(mods, mu), m,
             "exponent=" + format_g17(d.holder_exponent));
    }

    if (selected(d, "diffuse")) {
        Series s;
        std::vector<double> coinc_final;
        for (std::size_t k = 0; k < common; ++k) {
            double acc = 0.0;
            for (const auto &rec : records)
                acc += diffuseness_monitor(measure_of(rec.snapshots[k].positions),
                                           d.diffuse_scale)
                           .near_fraction;
            s.t.push_back(records.front().snapshots[k].t);
            s.v.push_back(acc / m);
        }
        for (const auto &rec : records)
            coinc_final.push_back(
                diffuseness_monitor(measure_of(rec.snapshots[common - 1].positions),
                                    d.diffuse_scale)
                    .coincident_fraction);
        const double mu = mean_of(coinc_final);
        push("coincident_fraction_final", mu, stderr_of(coinc_final, mu), m, win);
        report.series.push_back({"near_fraction_mean", std::move(s)});
    }

    return report;
}

std::string resolve_output_dir(const std::string &dir) {
    fs::path p(dir);
    if (p.is_absolute()) return p.string();
    const char *root = std::getenv("KSLAB_OUTPUT_ROOT");
    if (root && *root) return (fs::path(root) / p).string();
    return p.string();
}

namespace {

void print_report(const DiagnosticsReport &report, std::ostream &out) {
    for (const auto &e : report.estimates) {
        out << "  " << e.name << " = " << format_g17(e.value);
        if (e.std_error > 0.0) out << " +/- " << format_g17(e.std_error);
        out << "  (n=" << e.n << ", " << e.window << ")\n";
    }
    for (const auto &s : report.series)
        out << "  series " << s.name << ": " << s.series.t.size() << " points\n";
}

KeyMap load_with_overrides(const std::string &path, const std::vector<std::string> &overrides) {
    KeyMap map = parse_config_file(path);
    for (const auto &o : overrides) apply_override(map, o);
    return map;
}

std::string theta_tag(double theta) {
    std::ostringstream os;
    os << theta; // shortest form: 0.5, 1, 1.5 ...
    return os.str();
}

struct CellOutcome {
    double theta = 0.0;
    int n = 0;
    std::string dir; // relative to the sweep root
    std::string status = "ok";
    std::string error;
    int replicas = 0;
    int collapsed = 0;
    bool single_atom_law = false;
    bool has_k3 = false;
    std::vector<std::optional<double>> taus;
    DiagnosticsReport report;
};

} // namespace

int cmd_run(const std::string &config_path, const std::vector<std::string> &overrides,
            std::ostream &out, std::ostream &err) {
    try {
        const RunSpec spec = run_spec_from(load_with_overrides(config_path, overrides));
        const auto records = simulate_replicas(spec, 0);
        const auto report = run_diagnostics(spec, records);
        const std::string dir = resolve_output_dir(spec.cfg.output_dir);
        write_run_dir(dir, spec, shared_family().content_hash, records, report);

        int collapsed = 0;
        for (const auto &rec : records) collapsed += rec.collapsed ? 1 : 0;
        out << "run: theta=" << format_g17(spec.cfg.theta) << " n=" << spec.cfg.n
            << " replicas=" << spec.cfg.replicas << " collapsed=" << collapsed << "\n";
        print_report(report, out);
        out << "wrote " << dir << "\n";
        return 0;
    } catch (const std::invalid_argument &e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

namespace {

void write_sweep_aggregates(const fs::path &root, const SweepSpec &sweep,
                            std::vector<CellOutcome> &cells, json &aggregates,
                            std::ostream &err) {
    fs::create_directories(root / "aggregates");
    auto find_estimate = [](const DiagnosticsReport &rep,
                            const char *name) -> const NamedEstimate * {
        for (const auto &e : rep.estimates)
            if (e.name == name) return &e;
        return nullptr;
    };

    for (double theta : sweep.thetas) {
        std::vector<CellOutcome *> ok;
        for (auto &c : cells)
            if (c.status == "ok" && c.theta == theta) ok.push_back(&c);
        if (ok.empty()) continue;
        std::sort(ok.begin(), ok.end(),
                  [](const CellOutcome *a, const CellOutcome *b) { return a->n < b->n; });
        const std::string tag = theta_tag(theta);

        // per-population tables for the estimates this sweep computed
        auto table = [&](const char *estimate, const char *target, const std::string &file) {
            bool any = false;
            std::ostringstream csv;
            csv << "n,value,std_error" << (target ? ",target" : "") << "\n";
            for (const auto *c : ok) {
                const auto *e = find_estimate(c->report, estimate);
                if (!e) continue;
                any = true;
                csv << c->n << "," << format_g17(e->value) << "," << format_g17(e->std_error);
                if (target) {
                    const auto *t = find_estimate(c->report, target);
                    csv << "," << (t ? format_g17(t->value) : "");
                }
                csv << "\n";
            }
            if (!any) return;
            const std::string rel = "aggregates/" + file;
            std::ofstream f(root / rel, std::ios::binary);
            f << csv.str();
            aggregates.push_back(rel);
        };
        table("dispersion_drift_slope", "dispersion_drift_target", "drift_theta" + tag + ".csv");
        table("qv_slope", nullptr, "qv_theta" + tag + ".csv");
        table("pair_moment_integral", nullptr, "moment_theta" + tag + ".csv");

        // explosion-time summary across the population grid
        bool eligible = ok.size() >= 2;
        for (const auto *c : ok)
            eligible = eligible && c->has_k3 && c->replicas >= 50;
        for (std::size_t i = 0; i + 1 < ok.size(); ++i)
            eligible = eligible && ok[i]->n < ok[i + 1]->n;
        if (!eligible) continue;
        std::vector<ExplosionGroup> groups;
        for (const auto *c : ok) {
            ExplosionGroup g;
            g.n = c->n;
            g.taus = c->taus;
            g.single_atom_law = c->single_atom_law;
            groups.push_back(std::move(g));
        }
        try {
            const auto sum = explosion_time_summary(groups);
            std::ostringstream csv;
            csv << "n,replicas,collapsed,median,iqr,p_next\n";
            for (std::size_t i = 0; i < sum.rows.size(); ++i) {
                const auto &row = sum.rows[i];
                csv << row.n << "," << row.replicas << "," << row.collapsed << ","
                    << format_g17(row.median) << "," << format_g17(row.iqr) << ",";
                if (i < sum.p_adjacent.size()) csv << format_g17(sum.p_adjacent[i]);
                csv << "\n";
            }
            const std::string rel = "aggregates/explosion_theta" + tag + ".csv";
            std::ofstream f(root / rel, std::ios::binary);
            f << csv.str();
            aggregates.push_back(rel);
        } catch (const std::exception &e) {
            err << "warning: explosion summary skipped for theta=" << tag << ": " << e.what()
                << "\n";
        }
    }
}

} // namespace

int cmd_sweep(const std::string &config_path, const std::vector<std::string> &overrides,
              std::ostream &out, std::ostream &err) {
    SweepSpec sweep;
    try {
        sweep = sweep_spec_from(load_with_overrides(config_path, overrides));
    } catch (const std::invalid_argument &e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }

    std::string root_rel = "runs";
    if (auto it = sweep.base.find("output_dir"); it != sweep.base.end()) root_rel = it->second;
    const fs::path root(resolve_output_dir(root_rel));

    std::vector<CellOutcome> cells;
    std::uint64_t cell_index = 0;
    for (double theta : sweep.thetas) {
        for (int n : sweep.ns) {
            CellOutcome cell;
            cell.theta = theta;
            cell.n = n;
            cell.dir = "cells/theta" + theta_tag(theta) + "_n" + std::to_string(n);
            try {
                RunSpec spec = cell_spec(sweep, theta, n);
                spec.cfg.output_dir = cell.dir;
                const auto records = simulate_replicas(spec, cell_index);
                cell.report = run_diagnostics(spec, records);
                write_run_dir((root / cell.dir).string(), spec, shared_family().content_hash,
                              records, cell.report);
                cell.replicas = static_cast<int>(records.size());
                for (const auto &rec : records) {
                    cell.collapsed += rec.collapsed ? 1 : 0;
                    cell.taus.push_back(rec.collapsed ? std::optional<double>(rec.collapse_time)
                                                      : std::nullopt);
                }
                cell.single_atom_law = spec.cfg.law.kind == LawKind::AtomPlusJitter &&
                                       spec.cfg.law.atoms.size() == 1;
                for (const auto &det : spec.cfg.detectors) cell.has_k3 |= det.k == 3;
            } catch (const std::exception &e) {
                cell.status = "failed";
                cell.error = e.what();
                err << "warning: cell theta=" << theta_tag(theta) << " n=" << n
                    << " failed: " << e.what() << "\n";
            }
            cells.push_back(std::move(cell));
            ++cell_index;
        }
    }

    int ok_cells = 0;
    for (const auto &c : cells) ok_cells += c.status == "ok" ? 1 : 0;
    const bool partial = ok_cells < static_cast<int>(cells.size());

    json aggregates = json::array();
    if (ok_cells > 0) {
        try {
            write_sweep_aggregates(root, sweep, cells, aggregates, err);
        } catch (const std::exception &e) {
            err << "runtime error: " << e.what() << "\n";
            return 2;
        }
    }

    json doc;
    doc["format"] = kSweepFormat;
    doc["version"] = kVersion;
    doc["sweep.theta"] = json::array();
    for (double t : sweep.thetas) doc["sweep.theta"].push_back(format_g17(t));
    doc["sweep.n"] = sweep.ns;
    doc["template"] = json::object();
    for (const auto &[k, v] : sweep.base) doc["template"][k] = v;
    doc["cells"] = json::array();
    for (const auto &c : cells) {
        json o;
        o["theta"] = format_g17(c.theta);
        o["n"] = c.n;
        o["dir"] = c.dir;
        o["status"] = c.status;
        if (!c.error.empty()) o["error"] = c.error;
        doc["cells"].push_back(o);
    }
    doc["partial"] = partial;
    doc["aggregates"] = aggregates;

    try {
        fs::create_directories(root);
        std::ofstream f(root / "sweep.json", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (root / "sweep.json").string());
        f << doc.dump(2) << "\n";
    } catch (const std::exception &e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }

    out << "sweep: " << ok_cells << "/" << cells.size() << " cells completed";
    if (partial) {
        out << " (partial)";
        err << "warning: aggregation covers completed cells only\n";
    }
    out << "\n";
    for (const auto &rel : aggregates) out << "  aggregate " << rel.get<std::string>() << "\n";
    out << "wrote " << root.string() << "\n";
    return ok_cells > 0 ? 0 : 2;
}

int cmd_bessel(const BesselConfig &cfg, int replicas, std::uint64_t seed,
               const std::string &csv_path, std::ostream &out, std::ostream &err) {
    try {
        validate(cfg);
        if (!csv_path.empty()) {
            const auto z = simulate_bessel(cfg, seed);
            std::ofstream f(csv_path, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write " + csv_path);
            f << "t,value\n";
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double t = std::min(cfg.dt * static_cast<double>(i), cfg.horizon);
                f << format_g17(t) << "," << format_g17(z[i]) << "\n";
            }
            out << "wrote " << csv_path << " (" << z.size() << " points)\n";
            return 0;
        }
        if (replicas < 1) throw std::invalid_argument("bessel: replicas must be >= 1");
        const double frac = zero_hitting_fraction(cfg, replicas, seed);
        out << "dimension=" << format_g17(cfg.dimension) << " z0=" << format_g17(cfg.z0)
            << " horizon=" << format_g17(cfg.horizon) << " dt=" << format_g17(cfg.dt)
            << " replicas=" << replicas << " zero_hitting_fraction=" << format_g17(frac)
            << "\n";
        return 0;
    } catch (const std::invalid_argument &e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_table(double theta, int n, std::ostream &out, std::ostream &err) {
    try {
        const auto table = dimension_table(theta, n);
        out << "# theta=" << format_g17(theta) << " n=" << n << " k2=";
        if (table.k2 > 0)
            out << table.k2;
        else
            out << "none";
        out << "\n";
        out << "k,d\n";
        for (int k = 2; k <= n; ++k) out << k << "," << format_g17(table.at(k)) << "\n";
        return 0;
    } catch (const std::invalid_argument &e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace kslab
