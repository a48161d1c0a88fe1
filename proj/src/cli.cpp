#include "hebb/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hebb/errors.hpp"
#include "hebb/io/checkpoint.hpp"
#include "hebb/io/cifar.hpp"
#include "hebb/io/config.hpp"
#include "hebb/io/rf_export.hpp"
#include "hebb/whitening.hpp"

namespace hebb::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_file;
  std::string data_dir;
  std::string out_dir = ".";
  std::string preset = "default";
  std::string zca_file;
  std::string resume;
  std::string checkpoint_out;
  std::vector<std::string> checkpoints;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::size_t subset = 0;
  std::size_t test_subset = 0;
  bool untrained = false;
  std::vector<int> rf_layers;
  int zoom = 4;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

NetworkConfig resolve_config(const Options& o) {
  NetworkConfig cfg = NetworkConfig::preset(o.preset);
  if (!o.config_file.empty()) cfg = io::load_config(o.config_file, cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.epochs = *o.epochs;
  cfg.validate();
  return cfg;
}

void require_data(const Options& o) {
  if (o.data_dir.empty()) throw UsageError("--data <dir> is required");
}

io::Cifar10Set training_set(const Options& o) {
  io::Cifar10Set set = io::load_cifar10_train(o.data_dir);
  return o.subset > 0 ? set.head(o.subset) : set;
}

io::Cifar10Set test_set(const Options& o) {
  io::Cifar10Set set = io::load_cifar10_test(o.data_dir);
  return o.test_subset > 0 ? set.head(o.test_subset) : set;
}

fs::path zca_path(const Options& o) { return o.zca_file.empty() ? fs::path(o.out_dir) / "zca.hebb" : fs::path(o.zca_file); }

ZcaTransform fit_and_save_zca(const Options& o, const io::Cifar10Set& train, double epsilon, std::ostream& out) {
  const ZcaTransform zca = fit_zca(train.to_tensor(), epsilon);
  io::Checkpoint ckpt;
  ckpt.config = NetworkConfig::preset("default");
  ckpt.zca = zca;
  fs::create_directories(zca_path(o).parent_path().empty() ? fs::path(".") : zca_path(o).parent_path());
  io::save_checkpoint(ckpt, zca_path(o));
  out << "whitening fitted on " << train.size() << " images (eps " << epsilon << ") -> " << zca_path(o).string()
      << '\n';
  return zca;
}

int run_whiten(const Options& o, std::ostream& out) {
  require_data(o);
  const NetworkConfig cfg = resolve_config(o);
  fit_and_save_zca(o, training_set(o), cfg.zca_epsilon, out);
  return kOk;
}

int run_train(const Options& o, std::ostream& out) {
  require_data(o);
  const io::Cifar10Set train = training_set(o);

  Network net;
  std::optional<ZcaTransform> zca;
  if (!o.resume.empty()) {
    io::Checkpoint ckpt = io::load_checkpoint(o.resume);
    if (ckpt.layers.empty()) throw DataError("--resume checkpoint holds no network");
    NetworkConfig cfg = ckpt.config;
    if (o.epochs) cfg.epochs = *o.epochs;
    net = Network(cfg, ckpt.layers, ckpt.epochs_completed);
    zca = ckpt.zca;
  } else {
    net = Network::create(resolve_config(o));
  }
  if (!zca) {
    if (fs::exists(zca_path(o))) {
      zca = io::load_checkpoint(zca_path(o)).zca;
      if (!zca) throw DataError(zca_path(o).string() + " holds no whitening transform");
    } else {
      zca = fit_and_save_zca(o, train, net.config().zca_epsilon, out);
    }
  }
  const Tensor4 images = apply_zca(*zca, train.to_tensor());
  const auto t0 = std::chrono::steady_clock::now();
  net.train(images);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dst = o.checkpoint_out.empty() ? fs::path(o.out_dir) / ("network-" + preset_name(net.config()) + ".hebb")
                                                : fs::path(o.checkpoint_out);
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  io::save_checkpoint(net, zca, dst);
  out << "trained " << net.epochs_completed() << " epoch(s) on " << train.size() << " images in " << std::fixed
      << std::setprecision(1) << secs << " s -> " << dst.string() << '\n';
  return kOk;
}

int run_eval(const Options& o, std::ostream& out) {
  require_data(o);
  if (o.checkpoints.empty() || o.checkpoints.size() > 2) throw UsageError("eval needs one or two --checkpoint files");
  const auto t0 = std::chrono::steady_clock::now();
  const io::Cifar10Set train = training_set(o);
  const io::Cifar10Set test = test_set(o);
  const std::vector<int> train_labels = train.label_vector();
  const std::vector<int> test_labels = test.label_vector();

  std::vector<ReportRow> rows;
  for (const std::string& path : o.checkpoints) {
    const io::Checkpoint ckpt = io::load_checkpoint(path);
    if (ckpt.layers.empty() || !ckpt.zca) throw DataError(path + " needs both a network and a whitening transform");
    const Tensor4 train_x = apply_zca(*ckpt.zca, train.to_tensor());
    const Tensor4 test_x = apply_zca(*ckpt.zca, test.to_tensor());

    std::vector<std::pair<std::string, Network>> states;
    if (o.untrained) states.emplace_back("untrained", Network::create(ckpt.config));
    states.emplace_back(ckpt.epochs_completed == 0 ? "untrained" : "trained", ckpt.network());
    for (const auto& [state, net] : states) {
      for (const ProbeResult& p : run_probes(net, train_x, train_labels, test_x, test_labels)) {
        rows.push_back(ReportRow{fs::path(path).stem().string(), preset_name(ckpt.config), state, p, ckpt.config.seed});
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const nlohmann::json report = report_json(rows, secs);
  fs::create_directories(o.out_dir);
  std::ofstream(fs::path(o.out_dir) / "report.json") << report.dump(2) << '\n';
  const std::string text = report_text(rows);
  std::ofstream(fs::path(o.out_dir) / "report.txt") << text;
  out << text;
  return kOk;
}

int run_export_rf(const Options& o, std::ostream& out) {
  if (o.checkpoints.size() != 1) throw UsageError("export-rf needs exactly one --checkpoint");
  const io::Checkpoint ckpt = io::load_checkpoint(o.checkpoints.front());
  if (ckpt.layers.empty()) throw DataError("checkpoint holds no network");
  const Network net = ckpt.network();
  std::vector<int> layers = o.rf_layers;
  if (layers.empty()) {
    for (std::size_t l = 1; l <= net.layers().size(); ++l) layers.push_back(static_cast<int>(l));
  }
  fs::create_directories(o.out_dir);
  for (int l : layers) {
    const fs::path dst = fs::path(o.out_dir) / ("rf_layer" + std::to_string(l) + ".png");
    io::export_receptive_fields(net, l, dst, o.zoom);
    out << "layer " << l << ": " << net.layers()[l - 1].filters() << " fields of "
        << io::receptive_field_size(net.config(), l) << "px -> " << dst.string() << '\n';
  }
  return kOk;
}

int run_inspect(const Options& o, std::ostream& out) {
  if (o.checkpoints.size() != 1) throw UsageError("inspect needs exactly one --checkpoint");
  const io::Checkpoint ckpt = io::load_checkpoint(o.checkpoints.front());
  out << "# " << o.checkpoints.front() << "\n" << io::format_config(ckpt.config);
  out << "epochs_completed: " << ckpt.epochs_completed << '\n';
  if (ckpt.zca) {
    out << "whitening: dim " << ckpt.zca->dim() << ", epsilon " << ckpt.zca->epsilon() << ", fitted on "
        << ckpt.zca->fitted_on() << " images\n";
  }
  for (std::size_t l = 0; l < ckpt.layers.size(); ++l) {
    const ConvLayer& layer = ckpt.layers[l];
    double nmin = 1e300, nmax = 0.0, rmin = 1.0, rmax = 0.0, bmin = 1e300, bmax = -1e300;
    std::size_t active = 0;
    for (int f = 0; f < layer.filters(); ++f) {
      nmin = std::min(nmin, layer.weights.filter_norm(f));
      nmax = std::max(nmax, layer.weights.filter_norm(f));
      rmin = std::min(rmin, double(layer.rate_ema[f]));
      rmax = std::max(rmax, double(layer.rate_ema[f]));
      bmin = std::min(bmin, double(layer.bias[f]));
      bmax = std::max(bmax, double(layer.bias[f]));
    }
    for (float m : layer.mask.data()) active += m != 0.0f;
    out << "layer" << l + 1 << ": weights " << layer.weights.shape().str() << ", " << to_string(layer.activation)
        << ", connections " << active << "/" << layer.mask.size() << ", norm [" << nmin << ", " << nmax
        << "], rate_ema [" << rmin << ", " << rmax << "] (target " << layer.target_rate() << "), bias [" << bmin
        << ", " << bmax << "]\n";
  }
  return kOk;
}

}  // namespace

std::string preset_name(const NetworkConfig& config) {
  for (const char* name : {"default", "triangle-pruned"}) {
    if (config.layers == NetworkConfig::preset(name).layers) return name;
  }
  return "custom";
}

nlohmann::json report_json(const std::vector<ReportRow>& rows, double runtime_seconds) {
  nlohmann::json results = nlohmann::json::array();
  for (const ReportRow& r : rows) {
    results.push_back({{"network", r.network},
                       {"preset", r.preset},
                       {"layer", r.probe.probe},
                       {"state", r.state},
                       {"accuracy", r.probe.accuracy},
                       {"train_accuracy", r.probe.train_accuracy},
                       {"n_train", r.probe.n_train},
                       {"n_test", r.probe.n_test},
                       {"seed", r.seed}});
  }
  return {{"runtime_seconds", runtime_seconds}, {"results", results}};
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "network" << std::setw(11) << "state" << std::setw(14) << "probe"
     << std::right << std::setw(9) << "test %" << std::setw(9) << "train %" << std::setw(8) << "n_train"
     << std::setw(8) << "n_test" << '\n';
  for (const ReportRow& r : rows) {
    os << std::left << std::setw(18) << r.preset << std::setw(11) << r.state << std::setw(14) << r.probe.probe
       << std::right << std::fixed << std::setprecision(2) << std::setw(9) << 100.0 * r.probe.accuracy
       << std::setw(9) << 100.0 * r.probe.train_accuracy << std::setw(8) << r.probe.n_train << std::setw(8)
       << r.probe.n_test << '\n';
  }
  return os.str();
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Hebbian convolutional network trainer and linear-probe evaluator", "hebbcnn"};
  app.require_subcommand(1);

  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config_file, "key = value config file (overrides the preset)");
    cmd->add_option("--preset", o.preset, "default | triangle-pruned")
        ->check(CLI::IsMember({"default", "triangle-pruned"}));
    cmd->add_option("--seed", o.seed, "override the config seed");
    cmd->add_option("--data", o.data_dir, "directory holding the CIFAR-10 binary batches");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--subset", o.subset, "use only the first n training images");
  };

  CLI::App* whiten = app.add_subcommand("whiten", "fit the ZCA whitening transform");
  add_common(whiten);
  whiten->add_option("--zca", o.zca_file, "output file (default <out>/zca.hebb)");

  CLI::App* train = app.add_subcommand("train", "train a network");
  add_common(train);
  train->add_option("--epochs", o.epochs, "override the number of epochs");
  train->add_option("--zca", o.zca_file, "whitening file (default <out>/zca.hebb, fitted if missing)");
  train->add_option("--resume", o.resume, "continue training from a checkpoint");
  train->add_option("--checkpoint", o.checkpoint_out, "output checkpoint (default <out>/network-<preset>.hebb)");

  CLI::App* eval = app.add_subcommand("eval", "linear-probe accuracy report");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoints, "trained network checkpoint (one or two)")->required();
  eval->add_option("--test-subset", o.test_subset, "use only the first n test images");
  eval->add_flag("--untrained", o.untrained, "also report freshly initialized networks");

  CLI::App* rf = app.add_subcommand("export-rf", "write receptive-field grids as PNG");
  rf->add_option("--checkpoint", o.checkpoints, "network checkpoint")->required();
  rf->add_option("--layer", o.rf_layers, "layer(s) to export, 1-based (default all)");
  rf->add_option("--out", o.out_dir, "output directory");
  rf->add_option("--zoom", o.zoom, "pixels per receptive-field pixel")->check(CLI::Range(1, 64));

  CLI::App* inspect = app.add_subcommand("inspect", "print config, weight norms and firing rates");
  inspect->add_option("--checkpoint", o.checkpoints, "checkpoint")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (whiten->parsed()) return run_whiten(o, out);
    if (train->parsed()) return run_train(o, out);
    if (eval->parsed()) return run_eval(o, out);
    if (rf->parsed()) return run_export_rf(o, out);
    if (inspect->parsed()) return run_inspect(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsage;
}

}  // namespace hebb::cli
