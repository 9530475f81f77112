// Copyright 2026 The extsqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "extsqd/configuration.hpp"
#include "extsqd/error.hpp"
#include "extsqd/fits.hpp"
#include "extsqd/hamiltonian.hpp"
#include "extsqd/observables.hpp"
#include "extsqd/parallel.hpp"
#include "extsqd/pipelines.hpp"
#include "extsqd/random.hpp"
#include "extsqd/sampling.hpp"
#include "extsqd/state_io.hpp"

namespace extsqd::cli {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string command;
    std::string config_path;

    std::string fcidump, samples_in, state_in, curve;

    int sites = 0;
    double hop = 1.0, onsite = 4.0;
    bool periodic = false;
    std::string basis = "hopping";

    int n_alpha = -1, n_beta = -1;

    std::string source = "file";
    std::uint64_t shots = 10000;
    double noise = 0.0;

    std::size_t batches = 10, batch_size = 0;
    int score_iters = 1;
    double aug_fraction = 0.1;
    bool weighted = true, include_reference = true;

    std::size_t n_roots = 3, buffer = 3;
    double tol = 1e-8;
    int max_iter = 200;

    double threshold = 1e-3;
    std::vector<int> ranks{1, 2};
    std::string window;
    std::string scope = "occupied-virtual";
    std::size_t ext_chunk = 4096;
    bool reclose = true;

    double tau = 1e-8;
    std::string qse_reference = "state";

    std::uint64_t seed = 0;
    int workers = 1;
    double enum_cap = kDefaultEnumerationCap;
    std::size_t explicit_threshold = 20000, matvec_chunk = 256;

    std::string json_out, state_out, table_out, samples_out, fcidump_out;

    std::string morse_window = "0.9:1.5", tail_window = "2.0:inf";
    double mu = 7.001537;
    double sigma_floor = 1e-8;
    int fit_max_evaluations = 500;

    std::vector<std::string> groups;
};

// INI sections become dotted option names, so "[sector] alpha = 5" sets
// --sector.alpha. Keys under [group] collect into the repeated --group option.
class FlatIni : public CLI::ConfigINI {
   public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::vector<CLI::ConfigItem> out;
        CLI::ConfigItem groups{{}, "group", {}};
        for (auto item : CLI::ConfigINI::from_config(input)) {
            if (item.name == "++" || item.name == "--") continue;
            if (item.parents.size() == 1 && item.parents.front() == "group") {
                groups.inputs.push_back(item.name + ":" + CLI::detail::join(item.inputs, ","));
                continue;
            }
            if (!item.parents.empty()) {
                item.name = CLI::detail::join(item.parents, ".") + "." + item.name;
                item.parents.clear();
            }
            out.push_back(std::move(item));
        }
        if (!groups.inputs.empty()) out.push_back(std::move(groups));
        return out;
    }
};

void add_options(CLI::App& app, RunConfig& c) {
    app.set_config("--config", "", "INI run configuration; command-line values take precedence");
    app.config_formatter(std::make_shared<FlatIni>());
    app.allow_config_extras(CLI::config_extras_mode::error);

    app.add_option("--input.fcidump", c.fcidump, "FCIDUMP integral file");
    app.add_option("--input.samples", c.samples_in, "samples file (bitstring [count] per line)");
    app.add_option("--input.state", c.state_in, "state file written by a previous run");
    app.add_option("--input.curve", c.curve, "potential energy curve table");

    app.add_option("--model.sites", c.sites, "Hubbard chain length (0: no model)");
    app.add_option("--model.t", c.hop, "hopping");
    app.add_option("--model.u", c.onsite, "on-site repulsion");
    app.add_option("--model.periodic", c.periodic, "periodic boundary");
    app.add_option("--model.basis", c.basis, "orbital basis")->check(CLI::IsMember({"hopping", "site"}));

    app.add_option("--sector.alpha", c.n_alpha, "alpha electrons (default: FCIDUMP or half filling)");
    app.add_option("--sector.beta", c.n_beta, "beta electrons");

    app.add_option("--sampling.source", c.source, "where samples come from")
        ->check(CLI::IsMember({"file", "uniform", "state"}));
    app.add_option("--sampling.shots", c.shots, "number of simulated shots");
    app.add_option("--sampling.noise", c.noise, "bit-flip probability (source=state)");

    app.add_option("--sqd.batches", c.batches, "batches per round (K)");
    app.add_option("--sqd.batch_size", c.batch_size, "configurations drawn per batch (B)");
    app.add_option("--sqd.score_iters", c.score_iters, "configuration recovery rounds");
    app.add_option("--sqd.aug_fraction", c.aug_fraction, "ground-state draws per round, as a fraction of shots");
    app.add_option("--sqd.weighted", c.weighted, "multiplicity-weighted batch sampling");
    app.add_option("--sqd.include_reference", c.include_reference, "add the aufbau determinant to every batch");

    app.add_option("--solver.n_roots", c.n_roots, "roots kept");
    app.add_option("--solver.buffer", c.buffer, "extra roots solved and discarded");
    app.add_option("--solver.tol", c.tol, "Davidson residual tolerance");
    app.add_option("--solver.max_iter", c.max_iter, "Davidson iteration limit");

    app.add_option("--ext.threshold", c.threshold, "amplitude cut before extension");
    app.add_option("--ext.ranks", c.ranks, "excitation ranks")->delimiter(',');
    app.add_option("--ext.window", c.window, "orbital window first:last (0-based, inclusive)");
    app.add_option("--ext.scope", c.scope, "generator scope")->check(CLI::IsMember({"occupied-virtual", "general"}));
    app.add_option("--ext.chunk", c.ext_chunk, "seed configurations per extension chunk");
    app.add_option("--ext.reclose", c.reclose, "re-close the extended set under spin inversion");

    app.add_option("--qse.tau", c.tau, "relative overlap cutoff");
    app.add_option("--qse.reference", c.qse_reference, "reference state")->check(CLI::IsMember({"state", "rhf"}));

    app.add_option("--run.seed", c.seed, "master seed");
    app.add_option("--run.workers", c.workers, "worker threads")->envname("EXTSQD_NUM_WORKERS");
    app.add_option("--run.enum_cap", c.enum_cap, "largest sector that may be enumerated");
    app.add_option("--run.explicit_threshold", c.explicit_threshold, "largest basis stored as an explicit matrix");
    app.add_option("--run.chunk", c.matvec_chunk, "rows per matrix-vector task");

    app.add_option("--output.json", c.json_out, "result document (default: stdout)");
    app.add_option("--output.state", c.state_out, "state file to write");
    app.add_option("--output.table", c.table_out, "plot table to write");
    app.add_option("--output.samples", c.samples_out, "samples file to write");
    app.add_option("--output.fcidump", c.fcidump_out, "FCIDUMP file to write");

    app.add_option("--fit.morse_window", c.morse_window, "lo:hi bondlength window for the Morse fit");
    app.add_option("--fit.tail_window", c.tail_window, "lo:hi bondlength window for the power-law fit");
    app.add_option("--fit.mu", c.mu, "reduced mass in amu");
    app.add_option("--fit.sigma_floor", c.sigma_floor, "residual deviation floor (Hartree)");
    app.add_option("--fit.max_evaluations", c.fit_max_evaluations, "function evaluation limit");

    app.add_option("--group", c.groups, "orbital group name:i,j,... (repeatable)")->take_all();
}

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage) {
    std::uint64_t s = seed ^ (0xd1b54a32d192ed03ull * (stage + 1));
    return Rng::splitmix(s);
}

enum Stage : std::uint64_t { kSampleStage = 1, kSqdStage = 2 };

std::pair<double, double> parse_range(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InputError(std::string(what) + " must be lo:hi, got '" + text + "'");
    auto value = [&](const std::string& s, double fallback) {
        if (s.empty()) return fallback;
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size()) throw InputError(std::string(what) + ": bad number '" + s + "'");
        return v;
    };
    return {value(text.substr(0, colon), -std::numeric_limits<double>::infinity()),
            value(text.substr(colon + 1), std::numeric_limits<double>::infinity())};
}

std::optional<OrbitalWindow> parse_window(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto [lo, hi] = parse_range(text, "ext.window");
    if (lo != std::floor(lo) || hi != std::floor(hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw InputError("ext.window needs integer bounds");
    return OrbitalWindow{static_cast<int>(lo), static_cast<int>(hi)};
}

std::vector<OrbitalGroup> parse_groups(const std::vector<std::string>& specs, int m, std::ostream& err) {
    std::vector<OrbitalGroup> out;
    std::set<std::string> names;
    for (const auto& spec : specs) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos || colon == 0) throw InputError("group must be name:i,j,..., got '" + spec + "'");
        OrbitalGroup g{spec.substr(0, colon), {}};
        if (!names.insert(g.name).second) throw InputError("group '" + g.name + "' defined twice");
        std::stringstream list(spec.substr(colon + 1));
        for (std::string tok; std::getline(list, tok, ',');) {
            if (tok.empty()) continue;
            std::size_t used = 0;
            int p = -1;
            try {
                p = std::stoi(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) throw InputError("group '" + g.name + "': bad orbital index '" + tok + "'");
            g.orbitals.push_back(p);
        }
        validate_group(g, m);
        out.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            for (int p : out[i].orbitals)
                if (std::find(out[j].orbitals.begin(), out[j].orbitals.end(), p) != out[j].orbitals.end()) {
                    err << "warning: groups '" << out[i].name << "' and '" << out[j].name << "' overlap\n";
                    j = out.size() - 1;
                    break;
                }
    return out;
}

struct Problem {
    std::shared_ptr<const Hamiltonian> h;
    Sector sector;
    Json source;
};

Sector pick_sector(const RunConfig& c, int m, std::optional<Sector> hint) {
    Sector s{m, c.n_alpha, c.n_beta};
    if (c.n_alpha < 0 || c.n_beta < 0) {
        if (!hint) throw InputError("sector.alpha and sector.beta are required");
        if (c.n_alpha < 0) s.n_alpha = hint->n_alpha;
        if (c.n_beta < 0) s.n_beta = hint->n_beta;
    }
    s.validate();
    return s;
}

std::optional<Problem> load_problem(const RunConfig& c, bool required) {
    if (!c.fcidump.empty() && c.sites > 0) throw InputError("give either input.fcidump or model.sites, not both");
    Problem p;
    if (!c.fcidump.empty()) {
        auto data = read_fcidump(c.fcidump);
        p.h = std::make_shared<const Hamiltonian>(std::move(data.hamiltonian));
        p.sector = pick_sector(c, p.h->n_orbitals(), data.report.sector_hint);
        p.source = {{"kind", "fcidump"},
                    {"path", c.fcidump},
                    {"duplicate_records", data.report.duplicate_records},
                    {"ignored_records", data.report.ignored_records}};
        return p;
    }
    if (c.sites > 0) {
        Hamiltonian h = hubbard_chain(c.sites, c.hop, c.onsite, c.periodic);
        if (c.basis == "hopping") h = one_body_eigenbasis(h);
        p.h = std::make_shared<const Hamiltonian>(std::move(h));
        p.sector = pick_sector(c, c.sites, Sector{c.sites, (c.sites + 1) / 2, c.sites / 2});
        p.source = {{"kind", "hubbard"}, {"sites", c.sites}, {"t", c.hop},
                    {"u", c.onsite},     {"periodic", c.periodic}, {"basis", c.basis}};
        return p;
    }
    if (required) throw InputError("no Hamiltonian: set input.fcidump or model.sites");
    return std::nullopt;
}

Json sector_json(const Sector& s) {
    return {{"n_orbitals", s.n_orbitals}, {"n_alpha", s.n_alpha}, {"n_beta", s.n_beta}};
}

SolveOptions solve_options(const RunConfig& c) {
    SolveOptions o;
    o.n_roots = c.n_roots;
    o.degeneracy_buffer = c.buffer;
    o.davidson.tol = c.tol;
    o.davidson.max_iter = c.max_iter;
    o.subspace.workers = c.workers;
    o.subspace.explicit_threshold = c.explicit_threshold;
    o.subspace.chunk = c.matvec_chunk;
    return o;
}

SparseState normalized_root(const CIState& st, std::size_t mu) {
    const SparseState v = st.root(mu);
    const double n = v.norm();
    if (!(n > 0.0)) throw InputError("state root " + std::to_string(mu) + " is empty");
    std::vector<SparseState::Entry> e(v.entries().begin(), v.entries().end());
    for (auto& [x, a] : e) a /= n;
    return SparseState(v.sector(), std::move(e));
}

Json roots_json(const CIState& st) {
    std::vector<double> s2;
    for (std::size_t k = 0; k < st.n_roots(); ++k) s2.push_back(total_s_squared(normalized_root(st, k)));
    const auto labels = classify_roots(s2);
    Json roots = Json::array();
    for (std::size_t k = 0; k < st.n_roots(); ++k)
        roots.push_back({{"index", k},
                         {"energy", st.energies(static_cast<Eigen::Index>(k))},
                         {"s_squared", s2[k]},
                         {"label", labels[k].label},
                         {"kind", labels[k].kind},
                         {"converged", k < st.converged.size() ? static_cast<bool>(st.converged[k]) : true}});
    return roots;
}

bool all_converged(const CIState& st) {
    return std::all_of(st.converged.begin(), st.converged.end(), [](bool b) { return b; });
}

Json state_json(const CIState& st) {
    return {{"method", st.method}, {"dimension", st.dimension()}, {"roots", roots_json(st)}};
}

CIState load_checked_state(const RunConfig& c, const Problem* p) {
    if (c.state_in.empty()) throw InputError("input.state is required");
    CIState st = load_state(c.state_in);
    if (p && !(st.sector == p->sector))
        throw InputError("state file sector does not match the Hamiltonian sector");
    return st;
}

SampleSet acquire_samples(const RunConfig& c, const Sector& s, Json& info) {
    const auto seed = stage_seed(c.seed, kSampleStage);
    if (c.source != "state" && c.noise != 0.0) throw InputError("sampling.noise applies to sampling.source=state only");
    if (c.source == "file") {
        if (c.samples_in.empty()) throw InputError("sampling.source=file needs input.samples");
        info = {{"source", "file"}, {"path", c.samples_in}};
        return read_samples_file(c.samples_in, s.n_orbitals);
    }
    if (c.shots == 0) throw InputError("sampling.shots must be positive");
    if (c.source == "uniform") {
        info = {{"source", "uniform"}, {"shots", c.shots}};
        return sample_uniform_sector(s, c.shots, seed);
    }
    const CIState st = load_checked_state(c, nullptr);
    if (!(st.sector == s)) throw InputError("state file sector does not match the requested sector");
    info = {{"source", "state"}, {"path", c.state_in}, {"shots", c.shots}, {"noise", c.noise}};
    return sample_state(normalized_root(st, 0), c.shots, c.noise, seed);
}

Json stats_json(const ParticleNumberStats& st) {
    return {{"total", st.total},
            {"in_sector", st.in_sector},
            {"p_hw", st.p_hw},
            {"ci95", {st.ci95_low, st.ci95_high}},
            {"p_unif", st.p_unif}};
}

GeneratorScope parse_scope(const std::string& text) {
    return text == "general" ? GeneratorScope::General : GeneratorScope::OccupiedVirtual;
}

Json generator_json(const GeneratorSet& g) {
    Json j = {{"ranks", g.ranks},
              {"scope", g.scope == GeneratorScope::General ? "general" : "occupied-virtual"},
              {"size", g.size()},
              {"singles", g.counts.singles},
              {"doubles", g.counts.doubles},
              {"triples", g.counts.triples}};
    if (g.window) j["window"] = {g.window->first, g.window->last};
    return j;
}

void maybe_persist(const RunConfig& c, const CIState& st) {
    if (!c.state_out.empty()) persist_state(c.state_out, st);
}

SqdResult do_sqd(const RunConfig& c, const Problem& p, Json& results) {
    Json sample_info;
    const SampleSet samples = acquire_samples(c, p.sector, sample_info);
    sample_info["stats"] = stats_json(particle_number_stats(samples, p.sector));
    sample_info["distinct"] = samples.distinct();
    results["samples"] = sample_info;

    SqdOptions o;
    o.batches = c.batches;
    o.batch_size = c.batch_size;
    o.score_iters = c.score_iters;
    o.augment_fraction = c.aug_fraction;
    o.batching.weighted = c.weighted;
    o.batching.include_reference = c.include_reference;
    o.solve = solve_options(c);
    o.seed = stage_seed(c.seed, kSqdStage);
    o.workers = c.workers;
    auto r = run_sqd(p.h, samples, p.sector, o);

    Json trace = Json::array();
    for (const auto& it : r.trace)
        trace.push_back({{"round", it.round},
                         {"recovered_total", it.recovered_total},
                         {"recovered_distinct", it.recovered_distinct},
                         {"batch_ground_energies", it.batch_ground_energies},
                         {"batch_dimensions", it.batch_dimensions},
                         {"best_batch", it.best_batch},
                         {"energies", std::vector<double>(it.energies.data(), it.energies.data() + it.energies.size())}});
    results["sqd"] = state_json(r.state);
    results["sqd"]["trace"] = trace;
    return r;
}

struct Outcome {
    Json results = Json::object();
    bool converged = true;
};

Outcome cmd_model(const RunConfig& c) {
    if (c.sites <= 0) throw InputError("model needs model.sites");
    if (c.fcidump_out.empty()) throw InputError("model needs output.fcidump");
    const auto p = *load_problem(c, true);
    std::ofstream f(c.fcidump_out);
    if (!f) throw InputError("cannot write '" + c.fcidump_out + "'");
    write_fcidump(f, *p.h, p.sector);
    Outcome o;
    o.results["hamiltonian"] = p.source;
    o.results["sector"] = sector_json(p.sector);
    o.results["core_energy"] = p.h->core_energy();
    o.results["reference_energy"] = diagonal_element(*p.h, p.sector.reference());
    return o;
}

Outcome cmd_fci(const RunConfig& c) {
    const auto p = *load_problem(c, true);
    auto basis = std::make_shared<const SubspaceBasis>(enumerate_sector(p.sector, c.enum_cap));
    const CIState st = diagonalize(p.h, basis, p.sector, solve_options(c), "fci");
    maybe_persist(c, st);
    Outcome o;
    o.results["hamiltonian"] = p.source;
    o.results["sector"] = sector_json(p.sector);
    o.results["reference_energy"] = diagonal_element(*p.h, p.sector.reference());
    o.results["fci"] = state_json(st);
    o.converged = all_converged(st);
    return o;
}

Outcome cmd_sample(const RunConfig& c) {
    if (c.samples_out.empty()) throw InputError("sample needs output.samples");
    if (c.source == "file") throw InputError("sample needs sampling.source=uniform or state");
    Sector s;
    Json ham;
    if (auto p = load_problem(c, false)) {
        s = p->sector;
        ham = p->source;
    } else if (!c.state_in.empty()) {
        s = load_state(c.state_in).sector;
    } else {
        throw InputError("sample needs a Hamiltonian or input.state to fix the sector");
    }
    Json info;
    const SampleSet samples = acquire_samples(c, s, info);
    std::ofstream f(c.samples_out);
    if (!f) throw InputError("cannot write '" + c.samples_out + "'");
    write_samples(f, samples);
    info["distinct"] = samples.distinct();
    info["stats"] = stats_json(particle_number_stats(samples, s));
    Outcome o;
    if (!ham.is_null()) o.results["hamiltonian"] = ham;
    o.results["sector"] = sector_json(s);
    o.results["samples"] = info;
    return o;
}

int orbitals_in_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open samples file '" + path + "'");
    for (std::string line; std::getline(in, line);) {
        std::istringstream fields(line);
        std::string bits;
        if (!(fields >> bits)) continue;
        if (bits.size() % 2 != 0) throw InputError("samples bitstrings must have even length");
        return static_cast<int>(bits.size() / 2);
    }
    throw InputError("samples file '" + path + "' is empty");
}

Outcome cmd_stats(const RunConfig& c) {
    if (c.samples_in.empty()) throw InputError("stats needs input.samples");
    Sector s;
    if (auto p = load_problem(c, false))
        s = p->sector;
    else
        s = pick_sector(c, orbitals_in_samples(c.samples_in), std::nullopt);
    const SampleSet samples = read_samples_file(c.samples_in, s.n_orbitals);
    Outcome o;
    o.results["sector"] = sector_json(s);
    o.results["samples"] = {{"path", c.samples_in}, {"distinct", samples.distinct()}};
    o.results["stats"] = stats_json(particle_number_stats(samples, s));
    return o;
}

Outcome cmd_sqd(const RunConfig& c) {
    if (c.batch_size == 0) throw InputError("sqd needs sqd.batch_size");
    const auto p = *load_problem(c, true);
    Outcome o;
    o.results["hamiltonian"] = p.source;
    o.results["sector"] = sector_json(p.sector);
    o.results["reference_energy"] = diagonal_element(*p.h, p.sector.reference());
    const auto r = do_sqd(c, p, o.results);
    maybe_persist(c, r.state);
    o.converged = r.converged;
    return o;
}

Outcome cmd_ext_sqd(const RunConfig& c) {
    const auto p = *load_problem(c, true);
    Outcome o;
    o.results["hamiltonian"] = p.source;
    o.results["sector"] = sector_json(p.sector);
    o.results["reference_energy"] = diagonal_element(*p.h, p.sector.reference());
    CIState seed;
    if (!c.state_in.empty()) {
        seed = load_checked_state(c, &p);
        o.results["seed_state"] = {{"path", c.state_in}, {"method", seed.method}, {"dimension", seed.dimension()}};
    } else {
        if (c.batch_size == 0) throw InputError("ext-sqd needs input.state or sqd.batch_size for an in-process SQD run");
        auto r = do_sqd(c, p, o.results);
        o.converged = r.converged;
        seed = std::move(r.state);
    }
    const auto g = make_generators(p.sector, p.sector.reference(), c.ranks, parse_window(c.window), parse_scope(c.scope));
    ExtSqdOptions eo;
    eo.threshold = c.threshold;
    eo.extend.chunk = c.ext_chunk;
    eo.extend.workers = c.workers;
    eo.extend.reclose = c.reclose;
    eo.solve = solve_options(c);
    const auto r = run_ext_sqd(p.h, seed, g, eo);
    maybe_persist(c, r.state);
    const auto& t = r.extension.tallies;
    o.results["generators"] = generator_json(g);
    o.results["ext_sqd"] = state_json(r.state);
    o.results["ext_sqd"]["threshold"] = c.threshold;
    o.results["ext_sqd"]["cut_dimension"] = r.cut_dimension;
    o.results["ext_sqd"]["tallies"] = {{"new_unique", t.new_unique},
                                       {"annihilated", t.annihilated},
                                       {"duplicate_new", t.duplicate_new},
                                       {"already_present", t.already_present}};
    o.results["ext_sqd"]["closure_added"] = r.extension.closure_added;
    o.results["ext_sqd"]["dimension_bound"] = r.extension.dimension_bound;
    o.results["ext_sqd"]["bound_exceeded"] = r.extension.bound_exceeded;
    o.converged = o.converged && all_converged(r.state);
    return o;
}

Outcome cmd_qse(const RunConfig& c) {
    const auto p = *load_problem(c, true);
    Outcome o;
    o.results["hamiltonian"] = p.source;
    o.results["sector"] = sector_json(p.sector);
    SparseState ref;
    if (c.qse_reference == "rhf") {
        ref = SparseState(p.sector, {{p.sector.reference(), 1.0}});
        o.results["reference"] = {{"kind", "rhf"}};
    } else {
        const CIState st = load_checked_state(c, &p);
        ref = normalized_root(st, 0);
        o.results["reference"] = {{"kind", "state"}, {"path", c.state_in}, {"method", st.method}};
    }
    const double ref_energy = apply_hamiltonian(*p.h, ref).dot(ref);
    o.results["reference"]["energy"] = ref_energy;
    const auto g = make_generators(p.sector, p.sector.reference(), c.ranks, parse_window(c.window), parse_scope(c.scope));
    QseOptions qo;
    qo.tau = c.tau;
    qo.n_roots = c.n_roots;
    qo.subspace = solve_options(c).subspace;
    const auto r = run_qse(p.h, ref, g, qo);
    maybe_persist(c, r.state);
    o.results["generators"] = generator_json(g);
    o.results["qse"] = state_json(r.state);
    o.results["qse"]["tau"] = c.tau;
    o.results["qse"]["kept_dimension"] = r.kept_dimension;
    return o;
}

Outcome cmd_observables(const RunConfig& c, std::ostream& err) {
    auto p = load_problem(c, false);
    const CIState st = load_checked_state(c, p ? &*p : nullptr);
    const auto groups = parse_groups(c.groups, st.sector.n_orbitals, err);
    Outcome o;
    o.results["sector"] = sector_json(st.sector);
    o.results["state"] = {{"path", c.state_in}, {"method", st.method}, {"dimension", st.dimension()}};
    Json roots = roots_json(st);
    for (std::size_t k = 0; k < st.n_roots(); ++k) {
        const SparseState v = normalized_root(st, k);
        const auto prof = occupancy_profile(v);
        Json& r = roots[k];
        r["occupancy"] = {{"alpha", prof.alpha}, {"beta", prof.beta}, {"total", prof.total}};
        Json gj = Json::array();
        for (const auto& g : groups) {
            const auto [up, down] = group_charges(v, g);
            const auto s = local_spin(v, g);
            gj.push_back({{"name", g.name},
                          {"n_up", up},
                          {"n_down", down},
                          {"spin", {s[0], s[1], s[2]}},
                          {"spin_norm", std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])}});
        }
        r["groups"] = gj;
        Json pairs = Json::array();
        for (std::size_t i = 0; i < groups.size(); ++i)
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                const auto corr = spin_correlation(v, groups[i], groups[j]);
                pairs.push_back({{"groups", {groups[i].name, groups[j].name}}, {"raw", corr.raw}, {"connected", corr.connected}});
            }
        r["correlations"] = pairs;
    }
    o.results["roots"] = roots;
    return o;
}

Json morse_json(const MorseFit& f) {
    return {{"window", {f.window.lo, f.window.hi}},
            {"points", f.n_points},
            {"e_min", f.e_min},
            {"sigma_e_min", f.sigma_e_min},
            {"de", f.de},
            {"sigma_de", f.sigma_de},
            {"a", f.a},
            {"sigma_a", f.sigma_a},
            {"re", f.re},
            {"sigma_re", f.sigma_re},
            {"omega", f.omega},
            {"sigma_omega", f.sigma_omega},
            {"mu", f.mu},
            {"rms", f.rms},
            {"evaluations", f.evaluations}};
}

Json powerlaw_json(const PowerLawFit& f) {
    return {{"window", {f.window.lo, f.window.hi}},
            {"points", f.n_points},
            {"e_inf", f.e_inf},
            {"sigma_e_inf", f.sigma_e_inf},
            {"amplitude", f.amplitude},
            {"sigma_amplitude", f.sigma_amplitude},
            {"exponent", f.exponent},
            {"sigma_exponent", f.sigma_exponent},
            {"rms", f.rms},
            {"monotone_tail", f.monotone_tail},
            {"evaluations", f.evaluations}};
}

// JSON has no infinity; open window ends are written as null.
Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Outcome cmd_fit(const RunConfig& c, std::ostream& err) {
    if (c.curve.empty()) throw InputError("fit needs input.curve");
    const Curve curve = read_curve(c.curve);
    const auto [mlo, mhi] = parse_range(c.morse_window, "fit.morse_window");
    const auto [tlo, thi] = parse_range(c.tail_window, "fit.tail_window");
    FitSettings settings;
    settings.sigma_floor = c.sigma_floor;
    settings.max_evaluations = c.fit_max_evaluations;
    std::vector<MorseFit> morse;
    std::vector<PowerLawFit> tails;
    Outcome o;
    o.results["curve"] = {{"path", c.curve}, {"points", curve.r.size()}, {"states", curve.labels}};
    Json states = Json::array();
    for (std::size_t k = 0; k < curve.labels.size(); ++k) {
        morse.push_back(fit_morse(curve.r, curve.energies[k], {mlo, mhi}, c.mu, settings));
        tails.push_back(fit_powerlaw(curve.r, curve.energies[k], {tlo, thi}, settings));
        if (!tails.back().monotone_tail)
            err << "warning: state '" << curve.labels[k] << "' is not monotone inside the power-law window\n";
        const auto d = dissociation_energy(morse.back(), tails.back());
        Json mj = morse_json(morse.back()), pj = powerlaw_json(tails.back());
        mj["window"] = {finite_or_null(mlo), finite_or_null(mhi)};
        pj["window"] = {finite_or_null(tlo), finite_or_null(thi)};
        states.push_back({{"label", curve.labels[k]},
                          {"morse", mj},
                          {"powerlaw", pj},
                          {"dissociation", {{"d0_kj_mol", d.d0}, {"sigma_kj_mol", d.sigma}}}});
    }
    o.results["states"] = states;
    if (!c.table_out.empty()) {
        std::ofstream f(c.table_out);
        if (!f) throw InputError("cannot write '" + c.table_out + "'");
        write_fit_table(f, curve, morse, tails);
    }
    return o;
}

Json config_echo(const RunConfig& c) {
    return {{"input", {{"fcidump", c.fcidump}, {"samples", c.samples_in}, {"state", c.state_in}, {"curve", c.curve}}},
            {"model", {{"sites", c.sites}, {"t", c.hop}, {"u", c.onsite}, {"periodic", c.periodic}, {"basis", c.basis}}},
            {"sector", {{"alpha", c.n_alpha}, {"beta", c.n_beta}}},
            {"sampling", {{"source", c.source}, {"shots", c.shots}, {"noise", c.noise}}},
            {"sqd",
             {{"batches", c.batches},
              {"batch_size", c.batch_size},
              {"score_iters", c.score_iters},
              {"aug_fraction", c.aug_fraction},
              {"weighted", c.weighted},
              {"include_reference", c.include_reference}}},
            {"solver", {{"n_roots", c.n_roots}, {"buffer", c.buffer}, {"tol", c.tol}, {"max_iter", c.max_iter}}},
            {"ext",
             {{"threshold", c.threshold},
              {"ranks", c.ranks},
              {"window", c.window},
              {"scope", c.scope},
              {"chunk", c.ext_chunk},
              {"reclose", c.reclose}}},
            {"qse", {{"tau", c.tau}, {"reference", c.qse_reference}}},
            {"run",
             {{"seed", c.seed},
              {"enum_cap", c.enum_cap},
              {"explicit_threshold", c.explicit_threshold},
              {"chunk", c.matvec_chunk}}},
            {"output",
             {{"state", c.state_out},
              {"table", c.table_out},
              {"samples", c.samples_out},
              {"fcidump", c.fcidump_out}}},
            {"fit",
             {{"morse_window", c.morse_window},
              {"tail_window", c.tail_window},
              {"mu", c.mu},
              {"sigma_floor", c.sigma_floor},
              {"max_evaluations", c.fit_max_evaluations}}},
            {"groups", c.groups}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    c.workers = default_worker_count();
    CLI::App app{"Sample-based and extended sample-based diagonalization", "extsqd"};
    app.require_subcommand(1);
    app.fallthrough();
    add_options(app, c);
    const std::pair<const char*, const char*> commands[] = {
        {"fci", "diagonalize the full sector"},
        {"sqd", "sample-based diagonalization with configuration recovery"},
        {"ext-sqd", "cut, extend by excitations and re-diagonalize"},
        {"qse", "subspace expansion around a reference state"},
        {"sample", "write simulated samples"},
        {"observables", "spin and occupancy observables of a state file"},
        {"fit", "Morse and power-law fits of a potential energy curve"},
        {"model", "write a Hubbard chain as FCIDUMP"},
        {"stats", "particle-number statistics of a samples file"},
    };
    for (const auto& [name, help] : commands)
        app.add_subcommand(name, help)->callback([&c, n = std::string(name)] { c.command = n; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    const auto start = Clock::now();
    Outcome result;
    try {
        if (c.workers < 1) throw InputError("run.workers must be at least 1");
        if (c.command == "model")
            result = cmd_model(c);
        else if (c.command == "fci")
            result = cmd_fci(c);
        else if (c.command == "sample")
            result = cmd_sample(c);
        else if (c.command == "stats")
            result = cmd_stats(c);
        else if (c.command == "sqd")
            result = cmd_sqd(c);
        else if (c.command == "ext-sqd")
            result = cmd_ext_sqd(c);
        else if (c.command == "qse")
            result = cmd_qse(c);
        else if (c.command == "observables")
            result = cmd_observables(c, err);
        else
            result = cmd_fit(c, err);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConvergenceError& e) {
        err << "convergence error: " << e.what() << '\n';
        return kExitConvergence;
    }
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();

    Json doc;
    doc["tool"] = "extsqd";
    doc["version"] = kVersion;
    doc["command"] = c.command;
    doc["seed"] = c.seed;
    doc["config"] = config_echo(c);
    doc["results"] = result.results;
    doc["converged"] = result.converged;
    doc["timing"] = {{"workers", c.workers}, {"wall_seconds", wall}};
    const std::string text = doc.dump(2) + "\n";
    if (c.json_out.empty()) {
        out << text;
    } else {
        std::ofstream f(c.json_out);
        if (!f || !(f << text)) {
            err << "input error: cannot write '" << c.json_out << "'\n";
            return kExitInput;
        }
    }
    if (!result.converged) {
        err << "solver did not converge for every root; see the converged flags\n";
        return kExitConvergence;
    }
    return kExitOk;
}

}  // namespace extsqd::cli
