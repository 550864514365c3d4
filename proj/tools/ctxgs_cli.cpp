// ctxgs: command-line front end for the anchor scene codec.
//
// Exit codes: 0 success, 2 usage or input error, 3 corrupt data / CRC
// mismatch / symbol overflow, 4 training divergence.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctxgs/ctxgs.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ctxgs;

namespace {

constexpr const char* kToolVersion = "1.0.0";

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Input: return 2;
    case ErrorKind::Data:
    case ErrorKind::Sequencing:
    case ErrorKind::Overflow: return 3;
    case ErrorKind::Divergence: return 4;
  }
  return 1;
}

std::vector<std::string> g_argv;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Input, "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) fail(ErrorKind::Input, "write to '" + path.string() + "' failed");
}

/// Writes `<output>.json` describing how the artifact was produced.
void write_manifest(const fs::path& output, const std::string& command, std::uint64_t seed, const json& inputs,
                    const json& config) {
  json m;
  m["tool"] = "ctxgs";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["argv"] = g_argv;
  m["seed"] = seed;
  m["inputs"] = inputs;
  m["output"] = output.string();
  m["config"] = config;
  write_text(fs::path(output.string() + ".json"), m.dump(2) + "\n");
}

struct PartitionFlags {
  PartitionConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--levels", cfg.levels, "number of levels K")->capture_default_str();
    app->add_option("--tau", cfg.tau, "target ratio between adjacent levels")->capture_default_str();
    app->add_option("--eps0", cfg.eps0, "base voxel size")->capture_default_str();
    app->add_option("--kappa-tolerance", cfg.kappa_tolerance, "relative bracket width for the kappa search")
        ->capture_default_str();
  }
  json to_json() const {
    return {{"levels", cfg.levels}, {"tau", cfg.tau}, {"eps0", cfg.eps0}, {"kappa_tolerance", cfg.kappa_tolerance}};
  }
};

struct TrainFlags {
  TrainConfig cfg;
  bool no_hyperprior = false, no_context = false, no_anchor_forward = false;
  void add(CLI::App* app, std::uint32_t default_iterations) {
    cfg.iterations = default_iterations;
    app->add_option("--iterations", cfg.iterations, "training iterations")->capture_default_str();
    app->add_option("--lambda-e", cfg.lambda_e, "rate weight")->capture_default_str();
    app->add_option("--lambda-d", cfg.lambda_d, "quantization distortion weight")->capture_default_str();
    app->add_flag("--per-feature-dim", cfg.per_feature_dim, "also divide the rate term by the feature dimension");
    app->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
    app->add_option("--latent-lr", cfg.latent_lr, "learning rate for the latents (0: same as --lr)")
        ->capture_default_str();
    app->add_option("--batch", cfg.batch_anchors, "anchors per step (0: all)")->capture_default_str();
    app->add_option("--hidden", cfg.hidden, "hidden width of the context nets")->capture_default_str();
    app->add_option("--hc", cfg.h_c, "latent dimension divisor (D_z = D_f / hc)")->capture_default_str();
    app->add_flag("--no-hyperprior", no_hyperprior, "drop the per-anchor latent");
    app->add_flag("--no-context", no_context, "code every anchor with a position-only context");
    app->add_flag("--no-anchor-forward", no_anchor_forward, "re-code coarse anchors at every finer level");
  }
  TrainConfig resolve(std::uint64_t seed) {
    cfg.seed = seed;
    cfg.hyperprior = !no_hyperprior;
    cfg.plan.context = !no_context;
    cfg.plan.anchor_forward = !no_anchor_forward;
    return cfg;
  }
  json to_json() const {
    return {{"iterations", cfg.iterations},
            {"lambda_e", cfg.lambda_e},
            {"lambda_d", cfg.lambda_d},
            {"per_feature_dim", cfg.per_feature_dim},
            {"lr", cfg.lr},
            {"latent_lr", cfg.latent_lr},
            {"batch", cfg.batch_anchors},
            {"hidden", cfg.hidden},
            {"hc", cfg.h_c},
            {"hyperprior", !no_hyperprior},
            {"context", !no_context},
            {"anchor_forward", !no_anchor_forward}};
  }
};

struct NameFlags {
  std::vector<std::string> entries;
  void add(CLI::App* app) {
    app->add_option("--property", entries,
                    "property-name override key=value (keys: x, y, z, feature, scaling, offset, mask)");
  }
  PropertyNames resolve() const {
    PropertyNames n;
    for (const auto& e : entries) {
      auto eq = e.find('=');
      if (eq == std::string::npos) fail(ErrorKind::Input, "--property expects key=value, got '" + e + "'");
      n.set(e.substr(0, eq), e.substr(eq + 1));
    }
    return n;
  }
};

json breakdown_json(const RateBreakdown& b, std::size_t n) {
  return {{"hyper_bits", b.hyper},
          {"feature_bits", b.groups[0]},
          {"scaling_bits", b.groups[1]},
          {"offsets_bits", b.groups[2]},
          {"total_bits", b.total()},
          {"bits_per_anchor", n ? b.total() / double(n) : 0.0},
          {"symbols", b.symbols},
          {"distortion", b.distortion}};
}

json storage_json(const StorageReport& r) {
  return {{"header", r.header},         {"position", r.positions}, {"mask", r.masks},
          {"mlps", r.weights},          {"hyper", r.hyper},        {"feature", r.groups[0]},
          {"scaling", r.groups[1]},     {"offset", r.groups[2]},   {"crc", r.crc},
          {"total", r.total}};
}

std::string storage_csv(const StorageReport& r) {
  std::ostringstream o;
  o << "hyper,position,feature,scaling,offset,mask,mlps,header,crc,total\n"
    << r.hyper << ',' << r.positions << ',' << r.groups[0] << ',' << r.groups[1] << ',' << r.groups[2] << ','
    << r.masks << ',' << r.weights << ',' << r.header << ',' << r.crc << ',' << r.total << '\n';
  return o.str();
}

void print_storage(const StorageReport& r, std::ostream& os) {
  auto row = [&](const char* name, std::size_t b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-9s %12zu B  %10.6f MB\n", name, b, double(b) / 1e6);
    os << buf;
  };
  os << "storage:\n";
  row("Hyper", r.hyper);
  row("Position", r.positions);
  row("Feature", r.groups[0]);
  row("Scaling", r.groups[1]);
  row("Offset", r.groups[2]);
  row("Mask", r.masks);
  row("MLPs", r.weights);
  row("Header", r.header + r.crc);
  row("Total", r.total);
}

bool same_partition(const LevelPartition& a, const LevelPartition& b) { return a.same_structure(b); }

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& kind, SynthConfig sc, bool masks, const fs::path& out) {
  sc.kind = parse_synth_kind(kind);
  sc.dims.has_masks = masks;
  auto scene = synthesize(sc);
  save_scene(scene, out);
  json cfg = {{"kind", kind},
              {"anchors", scene.size()},
              {"grid_side", sc.grid_side},
              {"extent", sc.extent},
              {"clusters", sc.clusters},
              {"cluster_sd", sc.cluster_sd},
              {"feature_dim", sc.dims.feature_dim},
              {"scaling_dim", sc.dims.scaling_dim},
              {"offset_count", sc.dims.offset_count},
              {"masks", masks},
              {"mask_p", sc.mask_p},
              {"feature_scale", sc.feature_scale},
              {"scaling_scale", sc.scaling_scale},
              {"offset_scale", sc.offset_scale},
              {"rho", sc.rho},
              {"gamma", sc.gamma}};
  if (sc.kind == SynthKind::Correlated) {
    cfg["partition"] = {{"levels", sc.partition.levels}, {"tau", sc.partition.tau}, {"eps0", sc.partition.eps0}};
    auto rep = similarity_report(scene, partition(scene, sc.partition));
    cfg["mean_parent_cosine"] = rep.overall_mean();
  }
  write_manifest(out, "synth", sc.seed, json::array(), cfg);
  std::cout << "wrote " << out.string() << " (" << scene.size() << " anchors)\n";
  return 0;
}

int cmd_partition(const fs::path& in, const NameFlags& names, const PartitionFlags& pf, const std::string& json_out,
                  bool similarity) {
  auto scene = load_scene(in, names.resolve());
  auto p = partition(scene, pf.cfg);
  std::cout << "anchors " << scene.size() << ", K = " << p.levels << ", tau = " << pf.cfg.tau << "\n";
  json levels = json::array();
  for (std::uint32_t k = 0; k < p.levels; ++k) {
    double ratio = k > 0 && p.hat_counts[k - 1] ? double(p.hat_counts[k]) / double(p.hat_counts[k - 1]) : 1.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "  level %u: eps %.9g  kappa %.9g  |V| %u  |hatV| %u  ratio %.4f\n", k,
                  double(p.eps[k]), p.kappa[k], p.level_counts[k], p.hat_counts[k], ratio);
    std::cout << buf;
    levels.push_back({{"level", k},
                      {"eps", p.eps[k]},
                      {"kappa", p.kappa[k]},
                      {"count", p.level_counts[k]},
                      {"hat_count", p.hat_counts[k]},
                      {"ratio", ratio}});
  }
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << "\n";
  json j = {{"anchors", scene.size()}, {"levels", levels}, {"warnings", p.warnings}};
  if (similarity) {
    auto rep = similarity_report(scene, p);
    json pairs = json::array();
    for (const auto& pr : rep.pairs) {
      pairs.push_back({{"child_level", pr.child_level},
                       {"parent_level", pr.parent_level},
                       {"count", pr.count},
                       {"mean", pr.mean()},
                       {"histogram", pr.histogram}});
      std::cout << "  cosine(level " << pr.child_level << " -> " << pr.parent_level << "): mean " << pr.mean()
                << " over " << pr.count << "\n";
    }
    j["similarity"] = {{"pairs", pairs}, {"zero_norm_skipped", rep.zero_norm_skipped}, {"mean", rep.overall_mean()}};
  }
  if (!json_out.empty()) {
    write_text(json_out, j.dump(2) + "\n");
    write_manifest(json_out, "partition", 0, json::array({in.string()}), pf.to_json());
  }
  return 0;
}

TrainResult run_training(const AnchorScene& scene, const LevelPartition& p, const TrainConfig& tc, bool verbose) {
  const std::uint32_t every = std::max<std::uint32_t>(1, tc.iterations / 20);
  return train(scene, p, tc, [&](std::uint32_t it, double loss, double bpa) {
    if (verbose && (it % every == 0 || it + 1 == tc.iterations))
      std::cerr << "  iter " << it << "  loss " << loss << "  bits/anchor " << bpa << "\n";
  });
}

int cmd_train(const fs::path& in, const NameFlags& names, const PartitionFlags& pf, TrainFlags& tf,
              std::uint64_t seed, const fs::path& out, const std::string& report, bool quiet) {
  auto scene = load_scene(in, names.resolve());
  auto p = partition(scene, pf.cfg);
  auto tc = tf.resolve(seed);
  auto tr = run_training(scene, p, tc, !quiet);
  save_model(tr.model, out);
  const std::size_t n = scene.size();
  json j = {{"iterations", tc.iterations},
            {"best_iteration", tr.report.best_iteration},
            {"seconds", tr.report.seconds},
            {"initial", breakdown_json(tr.report.initial, n)},
            {"final", breakdown_json(tr.report.final, n)}};
  std::cout << "bits/anchor (code mode): " << (n ? tr.report.initial.total() / double(n) : 0.0) << " -> "
            << (n ? tr.report.final.total() / double(n) : 0.0) << "  (" << tr.report.seconds << " s)\n";
  if (!report.empty()) {
    if (fs::path(report).extension() == ".csv") {
      std::ostringstream o;
      o << "iteration,loss,bits_per_anchor,code_bits_per_anchor\n";
      for (std::size_t i = 0; i < tr.report.loss.size(); ++i)
        o << i << ',' << tr.report.loss[i] << ',' << tr.report.bits_per_anchor[i] << ','
          << tr.report.code_bits_per_anchor[i] << '\n';
      write_text(report, o.str());
    } else {
      j["loss"] = tr.report.loss;
      j["bits_per_anchor"] = tr.report.bits_per_anchor;
      j["code_bits_per_anchor"] = tr.report.code_bits_per_anchor;
      write_text(report, j.dump(2) + "\n");
    }
    write_manifest(report, "train", seed, json::array({in.string()}), {{"partition", pf.to_json()}, {"train", tf.to_json()}});
  }
  write_manifest(out, "train", seed, json::array({in.string()}),
                 {{"partition", pf.to_json()}, {"train", tf.to_json()}, {"result", j}});
  return 0;
}

int cmd_encode(const fs::path& in, const NameFlags& names, const PartitionFlags& pf, TrainFlags& tf,
               std::uint64_t seed, const std::string& model_path, const fs::path& out, bool stats, bool verify,
               bool external) {
  auto scene = load_scene(in, names.resolve());
  auto p = partition(scene, pf.cfg);
  auto tc = tf.resolve(seed);
  EntropyModel model;
  if (!model_path.empty()) {
    model = load_model(model_path);
  } else {
    model = run_training(scene, p, tc, false).model;
  }
  auto enc = encode_scene(scene, p, model, {tc.plan, external});
  ply::write_file(out, enc.bytes);
  write_manifest(out, "encode", seed, json::array({in.string()}),
                 {{"partition", pf.to_json()},
                  {"train", model_path.empty() ? tf.to_json() : json{{"model", model_path}}},
                  {"external_weights", external},
                  {"estimate", breakdown_json(enc.estimate, scene.size())},
                  {"storage", storage_json(enc.storage)}});
  std::cout << "wrote " << out.string() << " (" << enc.bytes.size() << " bytes, " << scene.size() << " anchors)\n";
  if (stats) print_storage(enc.storage, std::cout);
  if (verify) {
    EntropyModel ext = model;
    auto dec = decode_scene(enc.bytes, external ? &ext : nullptr);
    const bool ok = bit_equal(dec.scene, enc.reconstruction) && same_partition(dec.partition, p);
    std::cout << (ok ? "PASS" : "FAIL") << " round-trip verify\n";
    return ok ? 0 : 3;
  }
  return 0;
}

int cmd_decode(const fs::path& in, const std::string& model_path, const fs::path& out, const std::string& compare) {
  auto bytes = ply::read_file(in);
  EntropyModel ext;
  if (!model_path.empty()) ext = load_model(model_path);
  auto dec = decode_scene(bytes, model_path.empty() ? nullptr : &ext);
  save_scene(dec.scene, out);
  write_manifest(out, "decode", 0, json::array({in.string()}),
                 {{"model", model_path}, {"anchors", dec.scene.size()}, {"levels", dec.partition.levels}});
  std::cout << "wrote " << out.string() << " (" << dec.scene.size() << " anchors)\n";
  if (!compare.empty()) {
    auto ref = load_scene(compare);
    const bool ok = bit_equal(dec.scene, ref);
    std::cout << (ok ? "PASS" : "FAIL") << " compare with " << compare << "\n";
    return ok ? 0 : 3;
  }
  return 0;
}

int cmd_stats(const fs::path& in, const std::string& format) {
  auto bytes = ply::read_file(in);
  {
    // Validate the checksum before reporting on the layout.
    ByteReader tail(std::span<const std::uint8_t>(bytes).last(std::min<std::size_t>(4, bytes.size())), "bitstream");
    require(bytes.size() >= 4 && tail.u32() == crc32(std::span<const std::uint8_t>(bytes).first(bytes.size() - 4)),
            ErrorKind::Data, "bitstream: CRC mismatch (stream is corrupt)");
  }
  auto r = storage_report(bytes);
  if (format == "json")
    std::cout << storage_json(r).dump(2) << "\n";
  else if (format == "csv")
    std::cout << storage_csv(r);
  else
    print_storage(r, std::cout);
  return 0;
}

int cmd_ablate(const fs::path& in, const NameFlags& names, const PartitionFlags& pf, TrainFlags& tf,
               std::uint64_t seed, std::vector<std::string> variants, const std::string& out) {
  auto scene = load_scene(in, names.resolve());
  auto tc = tf.resolve(seed);
  if (variants.empty()) variants = {"full", "no-hyperprior", "no-context", "no-anchor-forward", "single-level"};
  std::ostringstream o;
  o << "variant,bits_per_anchor,hyper_bits,feature_bits,scaling_bits,offsets_bits,estimate_bits,payload_bytes,"
       "total_bytes,train_seconds\n";
  for (const auto& name : variants) {
    const auto v = parse_variant(name);
    std::cerr << "  training " << name << "...\n";
    auto row = ablation_run(scene, pf.cfg, tc, v);
    const std::size_t payload = row.storage.hyper + row.storage.groups[0] + row.storage.groups[1] + row.storage.groups[2];
    o << name << ',' << row.bits_per_anchor << ',' << row.estimate.hyper << ',' << row.estimate.groups[0] << ','
      << row.estimate.groups[1] << ',' << row.estimate.groups[2] << ',' << row.estimate.total() << ',' << payload
      << ',' << row.storage.total << ',' << row.train_seconds << '\n';
  }
  std::cout << o.str();
  if (!out.empty()) {
    write_text(out, o.str());
    write_manifest(out, "ablate", seed, json::array({in.string()}),
                   {{"partition", pf.to_json()}, {"train", tf.to_json()}, {"variants", variants}});
  }
  return 0;
}

int cmd_rd(const fs::path& in, const NameFlags& names, const PartitionFlags& pf, TrainFlags& tf, std::uint64_t seed,
           std::vector<double> lambdas, const std::string& out) {
  auto scene = load_scene(in, names.resolve());
  auto p = partition(scene, pf.cfg);
  std::sort(lambdas.begin(), lambdas.end());
  std::ostringstream o;
  o << "lambda_e,bits_per_anchor,distortion,payload_bytes\n";
  double prev = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    auto tc = tf.resolve(seed);
    tc.lambda_e = lambdas[i];
    std::cerr << "  training lambda_e = " << lambdas[i] << "...\n";
    auto tr = run_training(scene, p, tc, false);
    auto enc = encode_scene(scene, p, tr.model, {tc.plan, false});
    const std::size_t payload = enc.storage.hyper + enc.storage.groups[0] + enc.storage.groups[1] + enc.storage.groups[2];
    const double bpa = scene.empty() ? 0.0 : 8.0 * double(payload) / double(scene.size());
    // Attribute MSE of the reconstruction.
    double se = 0.0;
    std::size_t cnt = 0;
    for (std::size_t a = 0; a < scene.size(); ++a) {
      const auto &x = scene.anchors[a], &y = enc.reconstruction.anchors[a];
      auto acc = [&](const std::vector<float>& u, const std::vector<float>& v, bool offsets) {
        for (std::size_t j = 0; j < u.size(); ++j) {
          if (offsets && !x.offset_active(j / 3)) continue;
          const double d = double(u[j]) - double(v[j]);
          se += d * d;
          ++cnt;
        }
      };
      acc(x.feature, y.feature, false);
      acc(x.scaling, y.scaling, false);
      acc(x.offsets, y.offsets, true);
    }
    const double mse = cnt ? se / double(cnt) : 0.0;
    if (i > 0 && !(bpa < prev))
      std::cerr << "warning: bits per anchor did not decrease from lambda_e = " << lambdas[i - 1] << " to "
                << lambdas[i] << "\n";
    prev = bpa;
    o << lambdas[i] << ',' << bpa << ',' << mse << ',' << payload << '\n';
  }
  std::cout << o.str();
  if (!out.empty()) {
    write_text(out, o.str());
    write_manifest(out, "rd", seed, json::array({in.string()}),
                   {{"partition", pf.to_json()}, {"train", tf.to_json()}, {"lambdas", lambdas}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"ctxgs: anchor scene codec with hierarchical context models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();

  NameFlags names;
  PartitionFlags pf;
  TrainFlags tf_train, tf_enc, tf_ab, tf_rd;
  std::string input, output, report, model_path, format = "table", compare, json_out;
  bool quiet = false, stats = false, verify = false, external = false, similarity = false;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic anchor scene");
  std::string kind = "correlated";
  SynthConfig sc;
  bool masks = false;
  synth->add_option("--kind", kind, "grid | clustered | iid | correlated")->capture_default_str();
  synth->add_option("--anchors", sc.anchors, "anchor count (not used by grid)")->capture_default_str();
  synth->add_option("--grid-side", sc.grid_side, "grid side length")->capture_default_str();
  synth->add_option("--extent", sc.extent, "side of the position cube")->capture_default_str();
  synth->add_option("--clusters", sc.clusters, "cluster count")->capture_default_str();
  synth->add_option("--cluster-sd", sc.cluster_sd, "cluster spread")->capture_default_str();
  synth->add_option("--feature-dim", sc.dims.feature_dim, "feature dimension")->capture_default_str();
  synth->add_option("--scaling-dim", sc.dims.scaling_dim, "scaling dimension")->capture_default_str();
  synth->add_option("--offset-count", sc.dims.offset_count, "offsets per anchor")->capture_default_str();
  synth->add_flag("--masks", masks, "emit offset masks");
  synth->add_option("--mask-p", sc.mask_p, "probability of an active offset")->capture_default_str();
  synth->add_option("--feature-scale", sc.feature_scale, "feature amplitude")->capture_default_str();
  synth->add_option("--scaling-scale", sc.scaling_scale, "scaling amplitude")->capture_default_str();
  synth->add_option("--offset-scale", sc.offset_scale, "offset amplitude")->capture_default_str();
  synth->add_option("--rho", sc.rho, "parent-child correlation (correlated)")->capture_default_str();
  synth->add_option("--gamma", sc.gamma, "per-anchor shared innovation share (correlated)")->capture_default_str();
  synth->add_option("--levels", sc.partition.levels, "levels of the generating partition")->capture_default_str();
  synth->add_option("--tau", sc.partition.tau, "ratio of the generating partition")->capture_default_str();
  synth->add_option("--eps0", sc.partition.eps0, "base voxel size of the generating partition")->capture_default_str();
  synth->add_option("-o,--output", output, "output scene file")->required();

  // partition
  auto* part = app.add_subcommand("partition", "partition a scene into levels and print a summary");
  part->add_option("scene", input, "scene file")->required();
  pf.add(part);
  names.add(part);
  part->add_option("--json", json_out, "also write the summary as JSON");
  part->add_flag("--similarity", similarity, "report parent-child feature cosine similarity");

  // train
  auto* tr = app.add_subcommand("train", "fit entropy models to a scene");
  tr->add_option("scene", input, "scene file")->required();
  pf.add(tr);
  names.add(tr);
  tf_train.add(tr, 2000);
  tr->add_option("-o,--output", output, "output model file (.cgsm)")->required();
  tr->add_option("--report", report, "training curve (.csv or .json)");
  tr->add_flag("-q,--quiet", quiet, "no progress output");

  // encode
  auto* enc = app.add_subcommand("encode", "encode a scene into a bitstream");
  enc->add_option("scene", input, "scene file")->required();
  pf.add(enc);
  names.add(enc);
  tf_enc.add(enc, 0);
  enc->add_option("--model", model_path, "trained model (.cgsm); without it a model is trained with --iterations");
  enc->add_option("-o,--output", output, "output bitstream (.cgsc)")->required();
  enc->add_flag("--stats", stats, "print the storage breakdown");
  enc->add_flag("--verify", verify, "decode the result and compare (prints PASS/FAIL)");
  enc->add_flag("--external-weights", external, "leave the weights out of the stream");

  // decode
  auto* dec = app.add_subcommand("decode", "decode a bitstream into a scene file");
  dec->add_option("stream", input, "bitstream (.cgsc)")->required();
  dec->add_option("--model", model_path, "model file for streams written with --external-weights");
  dec->add_option("-o,--output", output, "output scene file")->required();
  dec->add_option("--compare", compare, "scene file expected to match the decoded scene bit for bit");

  // stats
  auto* st = app.add_subcommand("stats", "storage breakdown of a bitstream");
  st->add_option("stream", input, "bitstream (.cgsc)")->required();
  st->add_option("--format", format, "table | csv | json")->capture_default_str()->check(
      CLI::IsMember({"table", "csv", "json"}));

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and encode ablation variants");
  std::vector<std::string> variants;
  ab->add_option("scene", input, "scene file")->required();
  pf.add(ab);
  names.add(ab);
  tf_ab.add(ab, 2000);
  ab->add_option("--variants", variants,
                 "subset of full, no-hyperprior, no-context, no-anchor-forward, single-level")
      ->delimiter(',');
  ab->add_option("-o,--output", report, "also write the CSV here");

  // rd
  auto* rd = app.add_subcommand("rd", "rate sweep over lambda_e");
  std::vector<double> lambdas{0.0005, 0.001, 0.004};
  rd->add_option("scene", input, "scene file")->required();
  pf.add(rd);
  names.add(rd);
  tf_rd.cfg.lambda_d = 1.0;
  tf_rd.add(rd, 2000);
  rd->add_option("--lambdas", lambdas, "lambda_e values")->delimiter(',')->capture_default_str();
  rd->add_option("-o,--output", report, "also write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      sc.seed = seed;
      return cmd_synth(kind, sc, masks, output);
    }
    if (*part) return cmd_partition(input, names, pf, json_out, similarity);
    if (*tr) return cmd_train(input, names, pf, tf_train, seed, output, report, quiet);
    if (*enc) return cmd_encode(input, names, pf, tf_enc, seed, model_path, output, stats, verify, external);
    if (*dec) return cmd_decode(input, model_path, output, compare);
    if (*st) return cmd_stats(input, format);
    if (*ab) return cmd_ablate(input, names, pf, tf_ab, seed, variants, report);
    if (*rd) return cmd_rd(input, names, pf, tf_rd, seed, lambdas, report);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
