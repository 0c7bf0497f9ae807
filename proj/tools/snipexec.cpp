#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "snipexec/errors.hpp"
#include "snipexec/instrumenter.hpp"
#include "snipexec/prompts.hpp"
#include "snipexec/report.hpp"
#include "snipexec/scope_analyzer.hpp"

using namespace snipexec;

namespace {

std::string read_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// Appends every outgoing conversation to a JSON-lines file before delegating.
class DumpingGenerator : public Generator {
 public:
  DumpingGenerator(std::unique_ptr<Generator> inner, std::string path) : inner_(std::move(inner)), path_(std::move(path)) {}

  GeneratorBatch generate(const GeneratorRequest& request) override {
    {
      static std::mutex mu;
      std::lock_guard lock(mu);
      std::ofstream(path_, std::ios::app)
          << Json{{"conversation", request.conversation}, {"samples", request.samples}, {"attempt", request.attempt}}
                 .dump()
          << "\n";
    }
    return inner_->generate(request);
  }

 private:
  std::unique_ptr<Generator> inner_;
  std::string path_;
};

struct RunOptions {
  std::string corpus;
  std::string out = "snipexec-out";
  std::string model;
  std::string base_url;
  std::string dump_prompts;
  std::string shim;
  std::string interpreter = "python3";
  double rate = 0.0;
  int workers = 1;
  bool no_install = false;
  bool no_memo = false;
};

int run_command(RunConfig cfg, const RunOptions& o) {
  if (o.no_install) cfg.install_deps = false;
  if (cfg.generator != "llm" && cfg.generator != "heuristic") throw ContractViolation("unknown generator " + cfg.generator);
  if (cfg.install_deps && cfg.env_dir.empty()) throw ContractViolation("--env is required unless --no-install is given");

  std::unique_ptr<Installer> installer;
  SubprocessConfig backend_cfg;
  backend_cfg.interpreter = o.interpreter;
  backend_cfg.shim_path = o.shim;
  if (cfg.install_deps) {
    installer = std::make_unique<Installer>(cfg.env_dir);
    installer->ensure_environment();
    backend_cfg.interpreter = interpreter_for(cfg.env_dir);
  }

  LlmConfig llm;
  llm.model = o.model;
  if (!o.base_url.empty()) llm.base_url = o.base_url;
  auto limiter = std::make_shared<RateLimiter>(o.rate);
  if (cfg.generator == "llm") {
    if (llm.model.empty()) throw ContractViolation("--model is required with --generator llm");
    if (std::getenv(llm.api_key_env.c_str()) == nullptr) {
      throw ContractViolation("set " + llm.api_key_env + " to the API key");
    }
  }

  CorpusOptions opts;
  opts.out_dir = o.out;
  opts.workers = o.workers;
  opts.installer = installer.get();
  opts.memoize = !o.no_memo;
  opts.make_backend = [&] { return std::make_unique<SubprocessBackend>(backend_cfg); };
  opts.make_generator = [&]() -> std::unique_ptr<Generator> {
    std::unique_ptr<Generator> g;
    if (cfg.generator == "llm") {
      g = std::make_unique<LlmGenerator>(llm, make_http_transport(llm), limiter);
    } else {
      g = std::make_unique<HeuristicGenerator>(cfg.seed);
    }
    if (!o.dump_prompts.empty()) g = std::make_unique<DumpingGenerator>(std::move(g), o.dump_prompts);
    return g;
  };
  opts.on_report = [](const SnippetReport& r) {
    if (r.skipped()) {
      std::cerr << r.id << ": skipped (" << *r.skip_reason << ")\n";
    } else {
      std::cerr << r.id << ": coverage " << coverage_P(r) << " |P| " << r.result.P.size()
                << (r.result.degraded ? " (degraded)" : "") << "\n";
    }
  };

  const CorpusSummary s = run_corpus(o.corpus, cfg, opts);
  std::cout << Json(s).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesizes imports and initializations that make Python snippets executable."};
  app.require_subcommand(1);

  RunConfig cfg;
  RunOptions ro;
  ro.shim = std::getenv("SNIPEXEC_SHIM") != nullptr ? std::getenv("SNIPEXEC_SHIM") : SNIPEXEC_SHIM_PATH;
  ro.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  CLI::App* run = app.add_subcommand("run", "Search prefixes for every snippet of a corpus directory");
  run->add_option("corpus", ro.corpus, "Directory of .py snippets")->required()->check(CLI::ExistingDirectory);
  run->add_option("--n", cfg.n, "Step-1 and step-2 samples per query")->check(CLI::PositiveNumber);
  run->add_option("--k", cfg.k, "Coverage-guidance iterations")->check(CLI::NonNegativeNumber);
  run->add_option("--generator", cfg.generator, "llm or heuristic")->check(CLI::IsMember({"llm", "heuristic"}));
  run->add_option("--model", ro.model, "Chat model name for the llm generator");
  run->add_option("--base-url", ro.base_url, "Chat-completions endpoint origin");
  run->add_option("--rate", ro.rate, "Maximum generator requests per second (0: unlimited)");
  run->add_option("--env", cfg.env_dir, "Shared virtual environment for installed dependencies");
  run->add_flag("--no-install", ro.no_install, "Run with the interpreter as is, installing nothing");
  run->add_flag("--no-memo", ro.no_memo, "Execute repeated prefix texts again instead of reusing their outcome");
  run->add_option("--workers", ro.workers, "Snippets searched in parallel")->check(CLI::PositiveNumber);
  run->add_option("--seed", cfg.seed, "Seed of the heuristic generator");
  run->add_option("--timeout", cfg.prefix_timeout, "Seconds allowed per execution")->check(CLI::PositiveNumber);
  run->add_option("--out", ro.out, "Output directory for reports and summaries");
  run->add_option("--dump-prompts", ro.dump_prompts, "Append every outgoing prompt to this JSON-lines file");
  run->add_option("--interpreter", ro.interpreter, "Interpreter used with --no-install");
  run->add_option("--shim", ro.shim, "Path of the runtime module");

  std::string file;
  CLI::App* analyze = app.add_subcommand("analyze", "Print the undefined variables and members of a snippet");
  analyze->add_option("file", file)->required()->check(CLI::ExistingFile);
  bool source_map = false;
  CLI::App* instrument_cmd = app.add_subcommand("instrument", "Print a snippet with coverage probes");
  instrument_cmd->add_option("file", file)->required()->check(CLI::ExistingFile);
  instrument_cmd->add_flag("--map", source_map, "Print the probe-to-line source map as JSON instead");
  CLI::App* prompt = app.add_subcommand("prompt", "Print the undefinedness prompt of a snippet");
  prompt->add_option("file", file)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(cfg, ro);
    const Snippet snippet = make_snippet(stem(file), read_source(file));
    if (analyze->parsed()) {
      std::cout << Json(get_undefined_refs(snippet)).dump(2) << "\n";
    } else if (instrument_cmd->parsed()) {
      const InstrumentedSnippet inst = snipexec::instrument(snippet);
      if (source_map) {
        Json map = Json::object();
        for (const auto& [probe, line] : inst.source_map) map[std::to_string(probe)] = line;
        std::cout << map.dump(2) << "\n";
      } else {
        std::cout << inst.source;
      }
    } else {
      std::cout << render(gen_prompt1(snippet, get_undefined_refs(snippet)));
    }
  } catch (const std::exception& e) {
    std::cerr << "snipexec: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
