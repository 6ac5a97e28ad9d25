// End-to-end checks of the command line tool: each subcommand is exercised
// through a real process so argument parsing, file I/O and exit codes are all
// covered.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include <schatten/solvers.hpp>
#include <schatten/tensor_io.hpp>

using namespace schatten;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(SCHATTEN_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
    res.out.append(buf, n);
  const int status = ::pclose(pipe);
  REQUIRE(status != -1);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::filesystem::path work_dir() {
  static const std::filesystem::path dir = [] {
    std::filesystem::path p =
        std::filesystem::temp_directory_path() /
        ("schatten_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
    return p;
  }();
  return dir;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("lambda subcommand evaluates the scaling formula") {
  const RunResult res = run_cli("lambda --dims 50,50,20 --sigma 0.1");
  REQUIRE(res.code == 0);
  CHECK(std::stod(res.out) ==
        Catch::Approx(5.8119214885833683).epsilon(1e-14));

  const RunResult with_cap =
      run_cli("lambda --dims 50,50,20 --sigma 0.1 --alpha 1 --c0 2");
  REQUIRE(with_cap.code == 0);
  CHECK(std::stod(with_cap.out) ==
        Catch::Approx(2.0 * 5.8119214885833683 + 2.0).epsilon(1e-14));
}

TEST_CASE("norm subcommand on a written tensor") {
  const auto path = (work_dir() / "m.txt").string();
  write_tensor_file(path, DenseTensor({2, 2}, {3.0, 1.0, 1.0, 3.0}));

  const RunResult fro = run_cli("norm --input " + path + " --kind frobenius");
  REQUIRE(fro.code == 0);
  CHECK(std::stod(fro.out) == Catch::Approx(std::sqrt(20.0)).epsilon(1e-14));

  const RunResult s1 = run_cli("norm --input " + path + " --kind overlapped-s1");
  REQUIRE(s1.code == 0);
  CHECK(std::stod(s1.out) == Catch::Approx(12.0).epsilon(1e-12));

  const RunResult sinf =
      run_cli("norm --input " + path + " --kind overlapped-sinf");
  REQUIRE(sinf.code == 0);
  CHECK(std::stod(sinf.out) == Catch::Approx(4.0).epsilon(1e-12));

  const RunResult latent = run_cli("norm --input " + path + " --kind latent-s1");
  REQUIRE(latent.code == 0);
  const std::vector<std::string> out = lines_of(latent.out);
  REQUIRE(out.size() == 2);
  CHECK(std::stod(out[0]) == Catch::Approx(6.0).epsilon(1e-6));
  CHECK(out[1].rfind("duality_gap: ", 0) == 0);
}

TEST_CASE("denoise subcommand matches the in-process solver") {
  const auto in_path = (work_dir() / "noisy.txt").string();
  const auto out_path = (work_dir() / "denoised.txt").string();
  DenseTensor y({3, 3, 2}, std::vector<double>(18));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = 0.1 * static_cast<double>(i % 7) - 0.2;
  write_tensor_file(in_path, y);

  const RunResult res =
      run_cli("denoise --input " + in_path +
              " --method overlapped --lambda 0.3 --output " + out_path);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("converged: 1") != std::string::npos);

  SolverConfig cfg;
  cfg.lambda = 0.3;
  const auto [expected, diag] = overlapped_denoise(y, cfg);
  REQUIRE(diag.converged);
  const DenseTensor from_cli = read_tensor_file(out_path);
  CHECK(frobenius_norm(from_cli - expected) <= 1e-12);
}

TEST_CASE("denoise subcommand writes latent components that sum to the output") {
  const auto in_path = (work_dir() / "noisy2.txt").string();
  const auto out_path = (work_dir() / "denoised2.txt").string();
  const auto comp_dir = (work_dir() / "components").string();
  DenseTensor y({3, 4, 2}, std::vector<double>(24));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = 0.2 * static_cast<double>((i * 5) % 11) - 0.8;
  write_tensor_file(in_path, y);

  const RunResult res = run_cli(
      "denoise --input " + in_path + " --method latent --lambda 0.4 --output " +
      out_path + " --components-out " + comp_dir);
  REQUIRE(res.code == 0);

  const DenseTensor total = read_tensor_file(out_path);
  DenseTensor sum(total.dims());
  for (int k = 0; k < 3; ++k) {
    const auto comp_path =
        (std::filesystem::path(comp_dir) /
         ("component_" + std::to_string(k) + ".txt")).string();
    REQUIRE(std::filesystem::exists(comp_path));
    sum += read_tensor_file(comp_path);
  }
  CHECK(frobenius_norm(sum - total) <= 1e-12);
}

TEST_CASE("experiment subcommand produces a deterministic CSV") {
  const auto cfg_path = (work_dir() / "cfg.json").string();
  const auto csv_a = (work_dir() / "a.csv").string();
  const auto csv_b = (work_dir() / "b.csv").string();
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({
      "dims": [4, 4, 4],
      "rank_grid": [[1, 1, 1], [2, 2, 2]],
      "sigma": 0.05,
      "lambda_grid": [0.2, 0.6],
      "trials": 1,
      "base_seed": 99,
      "methods": ["overlapped", "latent"],
      "solver": {"max_iter": 1500, "rel_tol": 1e-6}
    })";
  }

  const RunResult first =
      run_cli("experiment --config " + cfg_path + " --out " + csv_a);
  REQUIRE(first.code == 0);
  const RunResult second = run_cli("experiment --config " + cfg_path +
                                   " --out " + csv_b + " --workers 2");
  REQUIRE(second.code == 0);

  std::ifstream fa(csv_a), fb(csv_b);
  std::vector<std::string> la, lb;
  std::string line;
  while (std::getline(fa, line)) la.push_back(line);
  while (std::getline(fb, line)) lb.push_back(line);
  REQUIRE(la.size() == 9);  // header + 2 ranks x 2 methods x 2 lambdas
  REQUIRE(lb.size() == la.size());
  CHECK(la[0] ==
        "dims,tucker_rank,latent_rank_sum,method,lambda,sigma,seed,trial,mse,"
        "tr_complexity,lr_complexity,iterations,converged,wall_time_s");
  for (std::size_t i = 0; i < la.size(); ++i) {
    // identical up to the wall-clock column
    CHECK(la[i].substr(0, la[i].rfind(',')) ==
          lb[i].substr(0, lb[i].rfind(',')));
  }
}

TEST_CASE("identifiability demo reports a tiny sum error") {
  const RunResult res =
      run_cli("identifiability-demo --dims 6,7,8 --ranks 2,3,2 --seed 42");
  REQUIRE(res.code == 0);
  double sum_err = -1.0;
  for (const std::string& line : lines_of(res.out)) {
    if (line.rfind("sum error: ", 0) == 0)
      sum_err = std::stod(line.substr(11));
  }
  REQUIRE(sum_err >= 0.0);
  CHECK(sum_err < 1e-10);
  CHECK(res.out.find("mode ranks before") != std::string::npos);
  CHECK(res.out.find("mode ranks after") != std::string::npos);
}

TEST_CASE("exit codes distinguish failure classes") {
  const auto t_path = (work_dir() / "m.txt").string();
  write_tensor_file(t_path, DenseTensor({2, 2}, {3.0, 1.0, 1.0, 3.0}));
  const auto out_path = (work_dir() / "o.txt").string();

  // 2: bad arguments
  CHECK(run_cli("norm --input " + t_path + " --kind bogus").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("lambda --dims 5,5 --sigma -1").code == 2);

  // 3: denoising stopped at the iteration cap
  CHECK(run_cli("denoise --input " + t_path +
                " --method overlapped --lambda 0.5 --max-iter 1 --output " +
                out_path)
            .code == 3);

  // 4: I/O failures
  CHECK(run_cli("norm --input " + (work_dir() / "absent.txt").string() +
                " --kind frobenius")
            .code == 4);
  const auto cfg_path = (work_dir() / "tiny.json").string();
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"dims": [3, 3], "rank_grid": [[1, 1]], "trials": 1,)"
        << R"( "lambda_grid": [0.5]})";
  }
  CHECK(run_cli("experiment --config " + cfg_path +
                " --out /nonexistent-dir/x.csv")
            .code == 4);
  CHECK(run_cli("experiment --config " +
                (work_dir() / "absent.json").string() + " --out " +
                (work_dir() / "x.csv").string())
            .code == 4);

  // 2: malformed or invalid config
  const auto bad_json = (work_dir() / "bad.json").string();
  {
    std::ofstream cfg(bad_json);
    cfg << "{ not json";
  }
  CHECK(run_cli("experiment --config " + bad_json + " --out " +
                (work_dir() / "y.csv").string())
            .code == 2);
  const auto bad_key = (work_dir() / "bad_key.json").string();
  {
    std::ofstream cfg(bad_key);
    cfg << R"({"dims": [3, 3], "rank_grid": [[1, 1]], "oops": true})";
  }
  CHECK(run_cli("experiment --config " + bad_key + " --out " +
                (work_dir() / "z.csv").string())
            .code == 2);
}
