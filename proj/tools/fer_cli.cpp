#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fer/fer.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string data;
  std::optional<std::uint64_t> seed;
};

fer::RunConfig load(const Common& c) {
  fer::RunConfig cfg = c.config.empty() ? fer::RunConfig{} : fer::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::vector<fer::SequenceRecord> records_for(const Common& c, const fer::RunConfig& cfg) {
  if (!c.data.empty()) return fer::ingest_dataset(c.data, cfg);
  return fer::gen_synthetic(cfg, cfg.seed);
}

std::vector<std::string> methods_for(const std::vector<std::string>& flag,
                                     const fer::RunConfig& cfg) {
  const auto& names = flag.empty() ? cfg.methods : flag;
  for (const auto& n : names) fer::parse_method(n);
  return names;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fer::fail(fer::ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) fer::fail(fer::ErrorKind::Io, "cannot write '" + path.string() + "'");
}

std::vector<std::size_t> select(const std::vector<fer::SequenceRecord>& records,
                                const fer::RunConfig& cfg, std::optional<int> fold, bool in_fold) {
  if (!fold) {
    std::vector<std::size_t> all(records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  if (*fold < 0 || *fold >= cfg.folds)
    fer::fail(fer::ErrorKind::InvalidArgument,
              "--fold must lie in [0, " + std::to_string(cfg.folds - 1) + "]");
  return fer::fold_indices(fer::assign_folds(records, cfg.folds), *fold, in_fold);
}

fs::path model_path(const std::string& dir, const std::string& method) {
  return fs::path(dir) / (method + ".model");
}

bool is_validation(fer::ErrorKind k) {
  return k == fer::ErrorKind::InvalidConfig || k == fer::ErrorKind::InvalidArgument;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facial expression recognition with two-dimensional heteroscedastic LDA"};
  app.require_subcommand(1);

  Common common;
  std::string out_dir = ".";
  std::vector<std::string> methods;
  std::optional<int> fold;
  std::size_t limit = 0;

  auto add_common = [&](CLI::App* sub, bool data) {
    sub->add_option("--config", common.config, "RunConfig file (key = value lines)");
    sub->add_option("--seed", common.seed, "Seed for synthetic data");
    if (data) sub->add_option("--data", common.data, "Dataset root; synthetic data when omitted");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, false);
  synth->add_option("--out-dir", out_dir, "Dataset root to write")->required();

  auto* train = app.add_subcommand("train", "Fit and serialize models");
  add_common(train, true);
  train->add_option("--out-dir", out_dir, "Directory for <method>.model files");
  train->add_option("--method", methods, "Methods to train (default: config methods)");
  train->add_option("--fold", fold, "Hold out this fold (0-based); all records when omitted");

  auto* eval = app.add_subcommand("eval", "Load models and report on a record set");
  add_common(eval, true);
  eval->add_option("--out-dir", out_dir, "Directory holding models; report.txt is written here");
  eval->add_option("--method", methods, "Methods to evaluate (default: config methods)");
  eval->add_option("--fold", fold, "Evaluate this fold only (0-based)");

  auto* cv = app.add_subcommand("cv", "Cross-validate every requested method");
  add_common(cv, true);
  cv->add_option("--out-dir", out_dir, "Directory for report.txt");
  cv->add_option("--method", methods, "Methods to run (default: config methods)");

  auto* dump = app.add_subcommand("gabor-dump", "Write Gabor bank responses as GBRD files");
  add_common(dump, true);
  dump->add_option("--out-dir", out_dir, "Directory for <id>.gbrd files");
  dump->add_option("--limit", limit, "Dump at most this many records (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const fer::RunConfig cfg = load(common);

    if (synth->parsed()) {
      const auto records = fer::gen_synthetic(cfg, cfg.seed);
      fer::write_dataset(out_dir, records);
      std::cout << "wrote " << records.size() << " sequences to " << out_dir << "\n";
      return 0;
    }

    if (dump->parsed()) {
      const auto records = records_for(common, cfg);
      ensure_dir(out_dir);
      const fer::GaborBank bank = fer::make_bank(cfg.gabor);
      std::size_t n = 0;
      for (const auto& rec : records) {
        if (limit && n == limit) break;
        const auto grid = fer::represent_sequence(rec.frames, bank);
        fer::BinaryWriter w;
        w.magic("GBRD");
        w.u32(static_cast<std::uint32_t>(grid.p()));
        w.u32(static_cast<std::uint32_t>(grid.f()));
        w.u32(static_cast<std::uint32_t>(grid(0, 0).rows()));
        w.u32(static_cast<std::uint32_t>(grid(0, 0).cols()));
        for (const auto& m : grid) w.matrix_values(m);
        fer::write_file((fs::path(out_dir) / (rec.id + ".gbrd")).string(), w.bytes());
        ++n;
      }
      std::cout << "wrote " << n << " response files to " << out_dir << "\n";
      return 0;
    }

    const auto names = methods_for(methods, cfg);
    const auto records = records_for(common, cfg);
    if (records.empty()) fer::fail(fer::ErrorKind::InvalidArgument, "no records to process");
    fer::FeatureCache cache(records, cfg);

    if (train->parsed()) {
      std::vector<fer::Method> ms;
      for (const auto& n : names) ms.push_back(fer::parse_method(n));
      ensure_dir(out_dir);
      const auto models = fer::train_models(ms, cache, select(records, cfg, fold, false));
      for (const auto& m : models) {
        const fs::path p = model_path(out_dir, fer::method_name(m.method));
        fer::write_file(p.string(), fer::serialize(m));
        std::cout << "wrote " << p.string() << "\n";
      }
      return 0;
    }

    if (eval->parsed()) {
      const auto test = select(records, cfg, fold, true);
      std::string summary = "records=" + std::to_string(test.size()) + "\n";
      for (const auto& n : names) {
        const auto model = fer::deserialize_model(fer::read_file(model_path(out_dir, n).string()));
        // Features follow the configuration the model was trained with.
        fer::FeatureCache model_cache(records, model.config);
        const fer::ConfusionMatrix cm = fer::evaluate(model, model_cache, test);
        std::cout << fer::format_table(cm, "Method " + n) << "\n";
        summary += fer::summary_lines(cm, n + ".eval");
      }
      write_text(fs::path(out_dir) / "report.txt", summary);
      return 0;
    }

    if (cv->parsed()) {
      const fer::CvResult res = fer::cross_validate(cache, names);
      std::cout << fer::format_report(res);
      ensure_dir(out_dir);
      write_text(fs::path(out_dir) / "report.txt",
                 fer::summary_report(res, records.size(), cfg.seed));
      return 0;
    }
  } catch (const fer::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation(e.kind()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
