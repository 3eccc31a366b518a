#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "fiberasym/cli.hpp"

using namespace fiberasym;
namespace fs = std::filesystem;

namespace {

class Scratch {
 public:
  Scratch() : dir_(fs::temp_directory_path() / ("fiberasym-cli-" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Run {
  int code;
  std::string out;
};

Run run_tool(const Scratch& s, const std::string& args) {
  const auto out = s.path("stdout.txt");
  const std::string cmd = std::string(FIBERASYM_TOOL) + " " + args + " > " + out.string() + " 2> " +
                          s.path("stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

const char* kDegenerateSpec = R"({"germ": {"n": 2, "k": 4, "monomials": [[1.0, [2, 2]]]}})";

}  // namespace

TEST(Spec, RoundTripIsIdempotent) {
  for (const auto& name : cli::fixture_names()) {
    const auto j1 = cli::to_json(cli::fixture(name));
    const auto j2 = cli::to_json(cli::parse_spec(j1));
    EXPECT_EQ(j1, j2) << name;
  }
}

TEST(Spec, InputErrors) {
  auto expect_input = [](const std::string& text) {
    try {
      cli::parse_spec_text(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Input) << text;
      EXPECT_EQ(cli::exit_code(e), cli::kInputError);
    }
  };
  expect_input("{not json");
  expect_input("[]");
  expect_input(R"({"regime": "singular"})");
  expect_input(R"({"regime": "sideways", "germ": {"n": 2, "k": 2, "monomials": [[1.0, [2, 0]]]}})");
  expect_input(R"({"germ": {"n": 2, "k": 2, "monomials": [[1.0, [2, 0]]]}, "symbol": {"t": {"name": "nope"}}})");
  expect_input(R"({"germ": {"n": 2, "k": 2, "monomials": [[1.0, [2, 0]]]}, "oracle": {"z_points": 1}})");
  expect_input(R"({"schema": 2, "germ": {"n": 2, "k": 2, "monomials": [[1.0, [2, 0]]]}})");
  EXPECT_THROW(cli::fixture("no-such-fixture"), Error);
}

TEST(Commands, ScheduleCsv) {
  const auto out = cli::cmd_schedule(2, 4, 3);
  EXPECT_EQ(out.text, "num,den,logpower\n1,2,0\n3,4,0\n1,1,1\n");
}

TEST(Commands, ClassifyRefusesDegenerateGerm) {
  const auto out = cli::cmd_classify(cli::parse_spec_text(kDegenerateSpec));
  EXPECT_EQ(out.code, cli::kRefused);
  EXPECT_NE(out.text.find("Unsupported"), std::string::npos);
}

TEST(Commands, PredictIsDeterministic) {
  const auto s = cli::fixture("quartic");
  EXPECT_EQ(cli::cmd_predict(s).text, cli::cmd_predict(s).text);
}

TEST(Commands, CoareaCsv) {
  const auto out = cli::cmd_coarea(cli::fixture("conical"));
  EXPECT_EQ(out.text.substr(0, out.text.find('\n')), "w,lvol");
}

TEST(Commands, ValidateRefusesUnsupported) {
  try {
    cli::cmd_validate(cli::parse_spec_text(kDegenerateSpec));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(cli::exit_code(e), cli::kRefused);
  }
}

TEST(Commands, EveryFixtureValidates) {
  for (const auto& name : cli::fixture_names()) {
    const auto out = cli::cmd_validate(cli::fixture(name));
    const auto j = nlohmann::json::parse(out.text);
    EXPECT_EQ(out.code, cli::kOk) << name << ": gap " << j["relative_gap"];
    EXPECT_TRUE(j["pass"].get<bool>()) << name;
    EXPECT_EQ(out.files.size(), 4u);
    EXPECT_EQ(out.files.at("validation.json"), out.text);
  }
}

TEST(Commands, MellinCheck) {
  const auto out = cli::cmd_mellin_check(1e-3);
  EXPECT_EQ(out.code, cli::kOk);
  EXPECT_EQ(cli::cmd_mellin_check(1e-14).code, cli::kValidationFailed);
}

TEST(Binary, ExitCodes) {
  Scratch s;
  EXPECT_EQ(run_tool(s, "schedule --n 2 --k 4 --count 2").code, 0);
  EXPECT_EQ(run_tool(s, "predict --spec " + s.path("missing.json").string()).code, cli::kInputError);
  EXPECT_EQ(run_tool(s, "bogus-command").code, cli::kInputError);
  const auto spec = s.write("degenerate.json", kDegenerateSpec);
  EXPECT_EQ(run_tool(s, "classify --spec " + spec.string()).code, cli::kRefused);
  EXPECT_EQ(run_tool(s, "example gamma-p2 --tolerance 1e-14").code, cli::kValidationFailed);
  EXPECT_EQ(run_tool(s, "mellin-check").code, 0);
}

TEST(Binary, SpecFileRoundTrip) {
  Scratch s;
  const auto r = run_tool(s, "example conical --print-spec");
  ASSERT_EQ(r.code, 0);
  const auto spec = s.write("conical.json", r.out);
  const auto p = run_tool(s, "predict --spec " + spec.string());
  ASSERT_EQ(p.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(p.out)["terms"][0]["coeff"].get<double>(), std::numbers::pi, 1e-9);
}

TEST(Binary, ThreadCountDoesNotChangeOutput) {
  Scratch s;
  const auto a = run_tool(s, "example gamma-p2 --threads 1 --out " + s.path("a").string());
  const auto b = run_tool(s, "example gamma-p2 --threads 3 --out " + s.path("b").string());
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"prediction.json", "samples.csv", "fit.json", "validation.json"})
    EXPECT_EQ(slurp(s.path("a") / f), slurp(s.path("b") / f)) << f;
}
