// tilestream command line: serve, export, gen-synthetic, fetch, eval-kshot.
//
// Every sampling flag can also be set through an environment variable named
// TILESTREAM_<FLAG> (upper case, dashes as underscores), e.g. TILESTREAM_SEED.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <pthread.h>

#include <CLI11.hpp>

#include "tilestream/embedding_io.hpp"
#include "tilestream/errors.hpp"
#include "tilestream/kshot.hpp"
#include "tilestream/manifest.hpp"
#include "tilestream/server.hpp"
#include "tilestream/shards.hpp"
#include "tilestream/synthetic.hpp"
#include "tilestream/tile_stream.hpp"

namespace ts = tilestream;

namespace {

struct SamplingFlags {
  std::string manifest;
  int tile_size = 256;
  std::string mpp = "2,1,0.5,0.25";
  double foreground_threshold = 0.4;
  std::string hsv_filter = "on";
  std::string hsv_disable_mpp;
  std::string hed_sigma = "0.05";
  int batch_size = 12;
  std::uint64_t seed = 0;
  std::string datasets;  // name[:weight],...
  std::string slide_weighting = "slide";
  int max_attempts = 1000;
  int workers = 1;
};

std::string env_name(const std::string& flag) {
  std::string out = "TILESTREAM_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
}

void add_sampling_flags(CLI::App* app, SamplingFlags& f) {
  flag(app, "manifest", f.manifest, "JSON-lines slide manifest")->required();
  flag(app, "tile-size", f.tile_size, "tile side in pixels");
  flag(app, "mpp", f.mpp, "comma-separated pixel spacings (µm/px) drawn per tile");
  flag(app, "foreground-threshold", f.foreground_threshold, "minimum tissue fraction");
  flag(app, "hsv-filter", f.hsv_filter, "on|off")->check(CLI::IsMember({"on", "off"}));
  flag(app, "hsv-disable-mpp", f.hsv_disable_mpp, "comma-separated mpps exempt from the HSV filter");
  flag(app, "hed-sigma", f.hed_sigma, "HED augmentation spread, or 'off'");
  flag(app, "batch-size", f.batch_size, "tiles per batch");
  flag(app, "seed", f.seed, "stream seed");
  flag(app, "datasets", f.datasets, "dataset[:weight],... (default: all, equal weights)");
  flag(app, "slide-weighting", f.slide_weighting, "slide|area")
      ->check(CLI::IsMember({"slide", "area"}));
  flag(app, "max-attempts", f.max_attempts, "rejection budget per tile");
  flag(app, "workers", f.workers, "threads building tiles within a batch");
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

ts::StreamConfig to_config(const SamplingFlags& f) {
  ts::StreamConfig cfg;
  cfg.sampler.tile_size_px = f.tile_size;
  cfg.sampler.mpp_choices = parse_doubles(f.mpp);
  cfg.sampler.foreground_threshold = f.foreground_threshold;
  cfg.sampler.max_attempts = f.max_attempts;
  if (f.hsv_filter == "off") cfg.hsv.reset();
  cfg.hsv_disabled_mpps = parse_doubles(f.hsv_disable_mpp);
  if (f.hed_sigma == "off") {
    cfg.hed_sigma.reset();
  } else {
    cfg.hed_sigma = std::stod(f.hed_sigma);
  }
  cfg.batch_size = f.batch_size;
  cfg.seed = f.seed;
  cfg.slide_weighting =
      f.slide_weighting == "area" ? ts::SlideWeighting::UniformByArea : ts::SlideWeighting::UniformBySlide;
  cfg.workers = f.workers;
  std::stringstream ss(f.datasets);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    ts::DatasetWeight w{item.substr(0, colon), 1.0};
    if (colon != std::string::npos) w.weight = std::stod(item.substr(colon + 1));
    cfg.datasets.push_back(w);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whole-slide tile sampling, filtering, augmentation and streaming"};
  app.require_subcommand(1);

  SamplingFlags serve_flags;
  std::string host = "127.0.0.1";
  int port = 7777;
  auto* serve = app.add_subcommand("serve", "stream tile batches over TCP");
  add_sampling_flags(serve, serve_flags);
  flag(serve, "host", host, "IPv4 address to bind");
  flag(serve, "port", port, "TCP port (0 = any free port)");

  SamplingFlags export_flags;
  std::size_t n_tiles = 0;
  std::string out_dir;
  int shard_size = ts::kDefaultShardCapacity;
  auto* exp = app.add_subcommand("export", "write tiles to shard files");
  add_sampling_flags(exp, export_flags);
  flag(exp, "n-tiles", n_tiles, "number of tiles")->required();
  flag(exp, "out", out_dir, "output directory")->required();
  flag(exp, "shard-size", shard_size, "tiles per shard file");

  ts::SyntheticSlideSpec synth;
  std::vector<int> size{4096, 4096};
  std::string synth_out;
  std::string style = "he";
  auto* gen = app.add_subcommand("gen-synthetic", "write a deterministic synthetic slide");
  gen->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  gen->add_option("--size", size, "width height")->expected(2)->capture_default_str();
  gen->add_option("--coverage", synth.tissue_coverage, "tissue fraction in (0,1)")
      ->capture_default_str();
  gen->add_option("--mpp", synth.level0_mpp, "level-0 µm/px")->capture_default_str();
  gen->add_option("--levels", synth.pyramid_levels, "pyramid levels (0 = auto)")
      ->capture_default_str();
  gen->add_option("--style", style, "he|gray")->check(CLI::IsMember({"he", "gray"}));
  gen->add_option("--out", synth_out, "sidecar path (.json)")->required();

  std::string fetch_host = "127.0.0.1";
  int fetch_port = 7777;
  std::uint32_t fetch_batch = 0;
  std::optional<std::uint64_t> fetch_seed;
  int fetch_batches = 1;
  auto* fetch = app.add_subcommand("fetch", "pull batches from a server and print metadata");
  fetch->add_option("--host", fetch_host)->capture_default_str();
  fetch->add_option("--port", fetch_port)->capture_default_str();
  fetch->add_option("--batch-size", fetch_batch, "0 = server default")->capture_default_str();
  fetch->add_option("--seed", fetch_seed, "stream seed (default: server's)");
  fetch->add_option("--batches", fetch_batches)->capture_default_str();

  std::string emb_path;
  std::string report_path;
  std::string task = "task";
  ts::eval::KShotSpec kspec;
  auto* kshot = app.add_subcommand("eval-kshot", "k-shot linear-probe protocol on an embedding file");
  kshot->add_option("--embeddings", emb_path, "MDNTEMB1 binary or .csv")->required();
  kshot->add_option("--k", kspec.k)->capture_default_str();
  kshot->add_option("--runs", kspec.runs)->capture_default_str();
  kshot->add_option("--seed", kspec.seed)->capture_default_str();
  kshot->add_option("--task", task)->capture_default_str();
  kshot->add_option("--report", report_path, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      const auto cfg = to_config(serve_flags);
      const auto manifest = ts::load_manifest(serve_flags.manifest);
      auto library = ts::SlideLibrary::build(manifest, cfg.mask_mpp);
      // Block the stop signals before any thread starts so that only the
      // sigwait below sees them.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      ts::TileServer server(library, cfg, {host, static_cast<std::uint16_t>(port)});
      server.start();
      std::cerr << "serving " << manifest.entries.size() << " slides on " << host << ":"
                << server.port() << std::endl;
      int sig = 0;
      sigwait(&stop_signals, &sig);
      server.stop();
      std::cerr << "stopped after " << server.connections_served() << " connections" << std::endl;
    } else if (exp->parsed()) {
      const auto cfg = to_config(export_flags);
      const auto manifest = ts::load_manifest(export_flags.manifest);
      auto library = ts::SlideLibrary::build(manifest, cfg.mask_mpp);
      const auto summary = ts::export_shards(library, cfg, n_tiles, out_dir, shard_size);
      std::cout << "wrote " << summary.total << " tiles in " << summary.shards.size()
                << " shards; index " << summary.index_path.string() << "\n";
    } else if (gen->parsed()) {
      synth.width_px = size[0];
      synth.height_px = size[1];
      synth.style = style == "gray" ? ts::TissueStyle::GrayMarker : ts::TissueStyle::HematoxylinEosin;
      std::cout << ts::generate_synthetic_slide(synth, synth_out).string() << "\n";
    } else if (fetch->parsed()) {
      ts::TileClient client(fetch_host, static_cast<std::uint16_t>(fetch_port), fetch_batch, fetch_seed);
      for (int b = 0; b < fetch_batches; ++b) {
        const auto batch = client.next_batch();
        for (const auto& m : batch.meta) std::cout << m.to_json().dump() << "\n";
      }
    } else if (kshot->parsed()) {
      const bool csv = emb_path.size() > 4 && emb_path.substr(emb_path.size() - 4) == ".csv";
      const auto data = csv ? ts::eval::read_embeddings_csv(emb_path) : ts::eval::read_embeddings(emb_path);
      const auto result = ts::eval::kshot_protocol(data, kspec);
      std::cout << task << ": balanced_accuracy " << result.mean << " ± " << result.std_of_mean
                << " (" << result.runs << " runs)\n";
      if (!report_path.empty()) {
        ts::eval::write_report(report_path, {{task, "balanced_accuracy", result}});
      }
    }
  } catch (const ts::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
