#include <cstdio>
#include <exception>
#include <iostream>

#include "tannin/experiment.hpp"

namespace {

constexpr const char* kUsage =
    "usage: tannin <command> [flags]\n"
    "\n"
    "commands:\n"
    "  analyze   correlation CSV + heatmap SVG, PCA importance, Shapiro-Wilk\n"
    "  train     train one variant; writes checkpoint, history, test report\n"
    "  compare   kNN, SVM, LR, RF, 1DCNN on one shared split\n"
    "  ablate    DNN-D, DNN, 1DCNN-D, 1DCNN with generalization gaps\n"
    "\n"
    "flags:\n"
    "  --config FILE   key=value config file (see configs/default.conf)\n"
    "  --data PATH     dataset CSV (default: TANNIN_DATA environment variable)\n"
    "  --seed N        global seed (required here or in the config file)\n"
    "  --out DIR       output directory (default: out)\n"
    "  --variant NAME  DNN-D | DNN | 1DCNN-D | 1DCNN (train only)\n"
    "  --seeds N       runs per variant for ablate aggregation\n";

}  // namespace

int main(int argc, char** argv) {
  try {
    const tannin::CliOptions opts = tannin::parse_cli(argc, argv);
    const tannin::ExperimentConfig cfg = tannin::make_config(opts);
    if (opts.command == "analyze") {
      tannin::cmd_analyze(cfg);
      std::cout << "wrote correlation.csv, heatmap.svg, pca.json, shapiro.json to "
                << cfg.out_dir << '\n';
    } else if (opts.command == "train") {
      const tannin::TrainResult res = tannin::cmd_train(cfg);
      std::cout << res.table;
    } else if (opts.command == "compare") {
      std::cout << tannin::cmd_compare(cfg).table;
    } else {
      std::cout << tannin::cmd_ablate(cfg).table;
    }
    return 0;
  } catch (const tannin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << kUsage;
    return 2;
  } catch (const tannin::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const tannin::TrainError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
