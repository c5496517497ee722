#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "guidewave/io/csv.hpp"
#include "guidewave/io/run.hpp"
#include "guidewave/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"guidewave: guided matter-wave interferometer simulations"};
  app.set_version_flag("--version", std::string(guidewave::io::tool_version));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 0;
  bool dump_fields = false;

  const char* descriptions[][2] = {
      {"eigen", "transverse spectra and the level correlation diagram"},
      {"split", "2D wave-packet propagation through a single splitter"},
      {"interfere", "2D wave-packet propagation through the full interferometer"},
      {"channels", "mode-channel model for one longitudinal packet"},
      {"thermal", "thermal multi-mode interference pattern and fringe report"},
      {"check-adiabatic", "adiabaticity diagnostic of the guide geometry"},
  };
  for (const auto& d : descriptions) {
    auto* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", config_path, "INI config or a previous manifest.json")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads (default: GUIDEWAVE_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--dump-fields", dump_fields, "also write potential and field dumps");
  }

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();

  guidewave::io::RunOptions opts;
  opts.out_dir = out_dir;
  opts.threads = threads > 0 ? threads : guidewave::parallel::threads_from_env();
  opts.dump_fields = dump_fields;

  std::string text;
  try {
    text = guidewave::io::read_text(config_path);
  } catch (const guidewave::Error& e) {
    std::fprintf(stderr, "guidewave: error [io]: %s\n", e.what());
    return guidewave::io::exit_code(e.code());
  }
  return guidewave::io::run_job(text, command, opts, config_path);
}
