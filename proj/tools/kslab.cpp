// Command line front end.  Subcommands:
//   run    <config>      simulate one cell and write a run directory
//   sweep  <config>      grid of cells plus cross-cell aggregate tables
//   verify <root>        evaluate acceptance criteria over finished runs
//   bessel               squared Bessel oracle (hitting fraction or CSV path)
//   table                print the critical dimension table d_{2,N}(k)
//
// Exit codes: 0 ok, 1 bad input, 2 runtime failure, 3 verification failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kslab/criteria.hpp"
#include "kslab/harness.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Keller-Segel particle laboratory"};
    app.require_subcommand(1);

    std::string run_config;
    std::vector<std::string> run_sets;
    auto *run = app.add_subcommand("run", "simulate one configuration");
    run->add_option("config", run_config, "config file")->required();
    run->add_option("--set", run_sets, "override a config key (key=value, repeatable)");

    std::string sweep_config;
    std::vector<std::string> sweep_sets;
    auto *sweep = app.add_subcommand("sweep", "run a theta x n grid");
    sweep->add_option("config", sweep_config, "sweep file")->required();
    sweep->add_option("--set", sweep_sets, "override a config key (key=value, repeatable)");

    std::string verify_root;
    auto *verify = app.add_subcommand("verify", "check acceptance criteria over run directories");
    verify->add_option("root", verify_root, "directory containing runs")->required();

    kslab::BesselConfig bcfg;
    bcfg.z0 = 1.0; // an interior start; z0=0 is only interesting for the CSV path
    int bessel_replicas = 500;
    std::uint64_t bessel_seed = 1;
    std::string bessel_csv;
    auto *bessel = app.add_subcommand("bessel", "squared Bessel oracle");
    bessel->add_option("--dimension", bcfg.dimension, "process dimension (>= 0)")->required();
    bessel->add_option("--z0", bcfg.z0, "initial value");
    bessel->add_option("--horizon", bcfg.horizon, "time horizon");
    bessel->add_option("--dt", bcfg.dt, "step size");
    bessel->add_flag("--absorb", bcfg.absorb_at_zero, "freeze paths at 0 instead of reflecting");
    bessel->add_option("--replicas", bessel_replicas, "paths for the hitting fraction");
    bessel->add_option("--seed", bessel_seed, "rng seed");
    bessel->add_option("--csv", bessel_csv, "write one path as t,value CSV instead");

    double table_theta = 2.0;
    int table_n = 0;
    auto *table = app.add_subcommand("table", "print d_{theta,N}(k) for k = 2..N");
    table->add_option("-n,--n", table_n, "particle count")->required();
    table->add_option("--theta", table_theta, "interaction strength");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return kslab::cmd_run(run_config, run_sets, std::cout, std::cerr);
        if (sweep->parsed())
            return kslab::cmd_sweep(sweep_config, sweep_sets, std::cout, std::cerr);
        if (verify->parsed())
            return kslab::cmd_verify(verify_root, std::cout, std::cerr);
        if (bessel->parsed())
            return kslab::cmd_bessel(bcfg, bessel_replicas, bessel_seed, bessel_csv,
                                     std::cout, std::cerr);
        if (table->parsed())
            return kslab::cmd_table(table_theta, table_n, std::cout, std::cerr);
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
