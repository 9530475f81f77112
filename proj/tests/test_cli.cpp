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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "extsqd/eigensolver.hpp"
#include "extsqd/fock_oracle.hpp"
#include "extsqd/state_io.hpp"
#include "test_support.hpp"

using namespace extsqd;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int rc = -1;
    std::string out, err;
    Json doc() const { return Json::parse(out); }
};

CliRun invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.rc = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class Scratch {
   public:
    explicit Scratch(const std::string& name) : dir_(fs::temp_directory_path() / ("extsqd_cli_" + name)) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Scratch() { fs::remove_all(dir_); }
    std::string path(const std::string& file) const { return (dir_ / file).string(); }
    std::string write(const std::string& file, const std::string& text) const {
        std::ofstream(path(file)) << text;
        return path(file);
    }

   private:
    fs::path dir_;
};

Json without_timing(Json d) {
    d.erase("timing");
    return d;
}

}  // namespace

TEST_CASE("fci on a written FCIDUMP matches the dense Fock-space oracle") {
    Scratch tmp("fci");
    std::mt19937_64 rng(31);
    const Sector s{4, 2, 1};
    const Hamiltonian h = testing::random_hamiltonian(4, rng);
    {
        std::ofstream f(tmp.path("h.fcidump"));
        write_fcidump(f, h, s);
    }
    const auto r = invoke({"fci", "--input.fcidump", tmp.path("h.fcidump"), "--solver.n_roots", "4"});
    REQUIRE(r.rc == cli::kExitOk);
    const Json d = r.doc();
    CHECK(d["results"]["sector"]["n_alpha"] == 2);
    CHECK(d["results"]["sector"]["n_beta"] == 1);

    const oracle::DenseFock fock(4);
    const Eigen::MatrixXd sub = fock.restrict(oracle::dense_hamiltonian(h, fock), enumerate_sector(s));
    const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub).eigenvalues();
    const auto& roots = d["results"]["fci"]["roots"];
    REQUIRE(roots.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(roots[k]["energy"].get<double>() - ref(static_cast<Eigen::Index>(k))) < 1e-10);
        CHECK(roots[k]["converged"] == true);
    }
    CHECK(d["converged"] == true);
    CHECK(d["tool"] == "extsqd");
    CHECK(d["command"] == "fci");
}

TEST_CASE("fci on the (6e,6o) Hubbard chain matches the enumerated-sector dense spectrum") {
    const auto r = invoke({"fci", "--model.sites", "6", "--model.t", "1", "--model.u", "4"});
    REQUIRE(r.rc == cli::kExitOk);
    const auto roots = r.doc()["results"]["fci"]["roots"];
    REQUIRE(roots.size() == 3);

    // Site basis, dense eigensolver: independent of the orbital rotation and of Davidson.
    auto h = std::make_shared<const Hamiltonian>(hubbard_chain(6, 1.0, 4.0, false));
    auto b = std::make_shared<const SubspaceBasis>(enumerate_sector({6, 3, 3}));
    const Eigen::MatrixXd a = to_dense(*build_subspace_operator(h, b));
    const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::abs(roots[k]["energy"].get<double>() - ref(static_cast<Eigen::Index>(k))) < 1e-10);
    CHECK(std::abs(roots[0]["energy"].get<double>() - -3.09256532) < 1e-8);
    CHECK(roots[0]["label"] == "S0");
    CHECK(std::abs(roots[0]["s_squared"].get<double>()) < 1e-8);
}

TEST_CASE("exit codes") {
    Scratch tmp("codes");
    CHECK(invoke({}).rc == cli::kExitInput);
    CHECK(invoke({"nonsense"}).rc == cli::kExitInput);
    CHECK(invoke({"fci", "--model.sites", "4", "--no-such-option", "1"}).rc == cli::kExitInput);
    CHECK(invoke({"fci", "--model.sites", "4", "--model.basis", "momentum"}).rc == cli::kExitInput);
    CHECK(invoke({"fci"}).rc == cli::kExitInput);
    CHECK(invoke({"fci", "--model.sites", "4", "--sector.alpha", "5"}).rc == cli::kExitInput);
    CHECK(invoke({"fci", "--input.fcidump", tmp.path("missing")}).rc == cli::kExitInput);
    CHECK(invoke({"sqd", "--model.sites", "4"}).rc == cli::kExitInput);
    CHECK(invoke({"sqd", "--model.sites", "4", "--sqd.batch_size", "5", "--sampling.source", "uniform",
               "--sampling.noise", "0.1"})
              .rc == cli::kExitInput);
    CHECK(invoke({"fci", "--model.sites", "4", "--run.workers", "0"}).rc == cli::kExitInput);
    CHECK(invoke({"observables", "--input.state", tmp.path("missing")}).rc == cli::kExitInput);

    const auto unknown = tmp.write("bad.ini", "[model]\nsites = 4\n[solver]\nroots = 2\n");
    const auto bad = invoke({"fci", "--config", unknown});
    CHECK(bad.rc == cli::kExitInput);
    CHECK(bad.err.find("solver.roots") != std::string::npos);
    CHECK(invoke({"fci", "--config", tmp.write("sect.ini", "[nowhere]\nx = 1\n")}).rc == cli::kExitInput);

    // Iterative solver capped at one iteration on a 4900-dimensional sector.
    const auto slow = invoke({"fci", "--model.sites", "8", "--solver.max_iter", "1", "--solver.n_roots", "1"});
    CHECK(slow.rc == cli::kExitConvergence);
    CHECK(slow.doc()["converged"] == false);
    CHECK(slow.doc()["results"]["fci"]["roots"][0]["converged"] == false);

    std::string curve = "R GS\n";
    for (int i = 0; i < 10; ++i) curve += std::to_string(0.8 + 0.1 * i) + " " + std::to_string(-0.1 * i) + "\n";
    CHECK(invoke({"fit", "--input.curve", tmp.write("c.txt", curve)}).rc == cli::kExitConvergence);

    const auto help = invoke({"--help"});
    CHECK(help.rc == cli::kExitOk);
    CHECK(help.out.find("ext-sqd") != std::string::npos);
}

TEST_CASE("config file values, command-line precedence and the worker variable") {
    Scratch tmp("config");
    const auto ini = tmp.write("run.ini",
                               "; chain\n[model]\nsites = 4\nu = 2.0\n\n[solver]\nn_roots = 2\n"
                               "[group]\nleft = 0,1\nright = 2,3\n[run]\nseed = 11\n");
    const auto from_file = invoke({"fci", "--config", ini}).doc();
    CHECK(from_file["config"]["model"]["u"] == 2.0);
    CHECK(from_file["config"]["solver"]["n_roots"] == 2);
    CHECK(from_file["config"]["groups"] == Json::array({"left:0,1", "right:2,3"}));
    CHECK(from_file["seed"] == 11);
    CHECK(from_file["results"]["fci"]["roots"].size() == 2);

    const auto overridden = invoke({"--model.u", "6", "fci", "--config", ini, "--solver.n_roots", "3"}).doc();
    CHECK(overridden["config"]["model"]["u"] == 6.0);
    CHECK(overridden["results"]["fci"]["roots"].size() == 3);
    CHECK(overridden["config"]["model"]["sites"] == 4);
    CHECK(overridden["results"]["fci"]["roots"][0]["energy"] != from_file["results"]["fci"]["roots"][0]["energy"]);

    ::setenv("EXTSQD_NUM_WORKERS", "3", 1);
    CHECK(invoke({"fci", "--config", ini}).doc()["timing"]["workers"] == 3);
    CHECK(invoke({"fci", "--config", ini, "--run.workers", "2"}).doc()["timing"]["workers"] == 2);
    ::unsetenv("EXTSQD_NUM_WORKERS");

    const auto to_file = invoke({"fci", "--config", ini, "--output.json", tmp.path("out.json")});
    CHECK(to_file.rc == cli::kExitOk);
    CHECK(to_file.out.empty());
    std::ifstream in(tmp.path("out.json"));
    CHECK(without_timing(Json::parse(in)) == without_timing(from_file));
}

TEST_CASE("sqd then ext-sqd through a state file equals the chained run") {
    Scratch tmp("chain");
    const std::vector<std::string> common = {"--model.sites",   "6",    "--sampling.source", "uniform",
                                              "--sampling.shots", "3000", "--sqd.batch_size",  "60",
                                              "--sqd.batches",   "3",    "--sqd.score_iters", "2",
                                              "--run.seed",      "17",   "--ext.threshold",   "0.02"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
        head.insert(head.end(), common.begin(), common.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };
    const auto sqd = invoke(with({"sqd"}, {"--output.state", tmp.path("sqd.bin")}));
    REQUIRE(sqd.rc == cli::kExitOk);
    const auto staged = invoke(with({"ext-sqd"}, {"--input.state", tmp.path("sqd.bin")}));
    const auto chained = invoke(with({"ext-sqd"}, {}));
    REQUIRE(staged.rc == cli::kExitOk);
    REQUIRE(chained.rc == cli::kExitOk);
    const Json a = staged.doc()["results"], b = chained.doc()["results"];
    CHECK(a["ext_sqd"] == b["ext_sqd"]);
    CHECK(a["generators"] == b["generators"]);
    CHECK(b["sqd"] == sqd.doc()["results"]["sqd"]);

    const CIState st = load_state(tmp.path("sqd.bin"));
    CHECK(st.method == "sqd");
    CHECK(st.energies(0) == sqd.doc()["results"]["sqd"]["roots"][0]["energy"].get<double>());
    const double e_sqd = st.energies(0);
    const double e_ext = a["ext_sqd"]["roots"][0]["energy"].get<double>();
    CHECK(e_ext <= e_sqd + 1e-12);

    // A state written for another sector is refused.
    CHECK(invoke(with({"ext-sqd"}, {"--input.state", tmp.path("sqd.bin"), "--sector.alpha", "2"})).rc ==
          cli::kExitInput);
}

TEST_CASE("sample, stats and qse") {
    Scratch tmp("sample");
    REQUIRE(invoke({"fci", "--model.sites", "4", "--output.state", tmp.path("fci.bin")}).rc == cli::kExitOk);
    const auto sampled = invoke({"sample", "--input.state", tmp.path("fci.bin"), "--sampling.source", "state",
                              "--sampling.shots", "2000", "--sampling.noise", "0.05", "--output.samples",
                              tmp.path("s.txt"), "--run.seed", "4"});
    REQUIRE(sampled.rc == cli::kExitOk);
    const auto stats = invoke({"stats", "--input.samples", tmp.path("s.txt"), "--sector.alpha", "2", "--sector.beta", "2"});
    REQUIRE(stats.rc == cli::kExitOk);
    const Json st = stats.doc()["results"];
    CHECK(st["sector"]["n_orbitals"] == 4);
    CHECK(st["stats"] == sampled.doc()["results"]["samples"]["stats"]);
    CHECK(st["stats"]["total"] == 2000);
    CHECK(st["stats"]["p_unif"].get<double>() == doctest::Approx(36.0 / 256.0));
    const double p_hw = st["stats"]["p_hw"].get<double>();
    CHECK(p_hw > 0.6);
    CHECK(p_hw < 1.0);
    CHECK(invoke({"stats", "--input.samples", tmp.path("s.txt")}).rc == cli::kExitInput);

    // QSE on the exact ground state keeps it through the identity generator.
    const auto qse = invoke({"qse", "--model.sites", "4", "--input.state", tmp.path("fci.bin"), "--ext.ranks", "1,2"});
    REQUIRE(qse.rc == cli::kExitOk);
    const auto fci = invoke({"fci", "--model.sites", "4"}).doc();
    CHECK(std::abs(qse.doc()["results"]["qse"]["roots"][0]["energy"].get<double>() -
                   fci["results"]["fci"]["roots"][0]["energy"].get<double>()) < 1e-9);
    CHECK(qse.doc()["results"]["generators"]["ranks"] == Json::array({1, 2}));
    CHECK(invoke({"qse", "--model.sites", "4", "--qse.reference", "rhf", "--ext.ranks", "0"}).rc == cli::kExitInput);
}

TEST_CASE("model export round-trips through fci") {
    Scratch tmp("model");
    REQUIRE(invoke({"model", "--model.sites", "5", "--model.u", "3", "--model.periodic", "true", "--output.fcidump",
                 tmp.path("h.fcidump")})
                .rc == cli::kExitOk);
    const auto from_file = invoke({"fci", "--input.fcidump", tmp.path("h.fcidump")}).doc();
    const auto direct = invoke({"fci", "--model.sites", "5", "--model.u", "3", "--model.periodic", "true"}).doc();
    CHECK(from_file["results"]["sector"] == direct["results"]["sector"]);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::abs(from_file["results"]["fci"]["roots"][k]["energy"].get<double>() -
                       direct["results"]["fci"]["roots"][k]["energy"].get<double>()) < 1e-12);
    CHECK(invoke({"model", "--model.sites", "5"}).rc == cli::kExitInput);
}

TEST_CASE("observables and fit output") {
    Scratch tmp("obs");
    REQUIRE(invoke({"fci", "--model.sites", "2", "--model.basis", "site", "--model.u", "50", "--output.state",
                 tmp.path("s.bin")})
                .rc == cli::kExitOk);
    const auto obs = invoke({"observables", "--input.state", tmp.path("s.bin"), "--group", "a:0", "--group", "b:1"});
    REQUIRE(obs.rc == cli::kExitOk);
    const Json root = obs.doc()["results"]["roots"][0];
    CHECK(root["label"] == "S0");
    CHECK(std::abs(root["correlations"][0]["raw"].get<double>() + 0.75) < 0.02);
    CHECK(root["groups"].size() == 2);

    const auto overlap = invoke({"observables", "--input.state", tmp.path("s.bin"), "--group", "a:0,1", "--group", "b:1"});
    CHECK(overlap.rc == cli::kExitOk);
    CHECK(overlap.err.find("overlap") != std::string::npos);
    CHECK(invoke({"observables", "--input.state", tmp.path("s.bin"), "--group", "a:7"}).rc == cli::kExitInput);
    CHECK(invoke({"observables", "--input.state", tmp.path("s.bin"), "--group", "a:0", "--group", "a:1"}).rc ==
          cli::kExitInput);

    std::string curve = "R GS\n";
    for (int i = 0; i < 20; ++i) {
        const double r = 0.8 + 0.1 * i, q = 1.0 - std::exp(-2.6 * (r - 1.1));
        curve += std::to_string(r) + " " + std::to_string(-109.1 + 0.35 * q * q) + "\n";
    }
    const auto fit = invoke({"fit", "--input.curve", tmp.write("c.txt", curve), "--output.table", tmp.path("t.tsv")});
    REQUIRE(fit.rc == cli::kExitOk);
    const Json m = fit.doc()["results"]["states"][0]["morse"];
    CHECK(m["points"] == 7);
    CHECK(std::abs(m["re"].get<double>() - 1.1) < 1e-4);
    CHECK(fit.doc()["results"]["states"][0]["powerlaw"]["window"][1].is_null());
    CHECK(fs::exists(tmp.path("t.tsv")));
}
