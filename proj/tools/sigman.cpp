// sigman command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sigman/errors.hpp"
#include "sigman/inference.hpp"
#include "sigman/synth.hpp"
#include "sigman/trainer.hpp"

namespace fs = std::filesystem;
using namespace sigman;

namespace {

std::string numbered(const char* prefix, std::size_t i, int width = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

/// Resolved configuration plus the command's own options, as comments.
void write_run_config(const fs::path& dir, const RunConfig& cfg, const std::vector<std::string>& extra) {
  std::string text;
  for (const auto& line : extra) text += "# " + line + "\n";
  write_text(dir / "run_config.txt", text + cfg.to_text());
}

void export_bundle(const SignalBundle& bundle, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  for (const auto& s : bundle) {
    // Two modalities may share an extension only in theory; suffix the index then.
    export_signal(s, dir / (stem + extension_for(s)));
  }
}

TrainState load_model(const std::string& ckpt) { return restore_checkpoint(ckpt); }

Index checked_id(const TrainState& model, Index id, const char* flag) {
  if (id < 0 || id >= model.latents.rows()) {
    throw ConfigError(std::string(flag) + " " + std::to_string(id) + " is outside [0, " +
                      std::to_string(model.latents.rows()) + ")");
  }
  return id;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string resume;
  std::vector<std::string> overrides;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = RunConfig::load(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  if (cfg.manifest.empty()) throw ConfigError("config: 'manifest' is required for training");
  const Manifest manifest = read_manifest(cfg.manifest);
  auto data = load_dataset(manifest);

  TrainState state;
  if (!a.resume.empty()) {
    state = restore_checkpoint(a.resume, &cfg);
    // Non-hashed keys (steps, intervals, paths) come from the current config.
    state.config = cfg;
    if (state.step >= cfg.train.steps) {
      std::cout << "step\t" << state.step << "\tnothing to do\n";
      return 0;
    }
  } else {
    state = TrainState::init(cfg, DatasetInfo::from(data));
  }

  const fs::path out_dir = cfg.out_dir;
  const fs::path ckpt_dir = cfg.checkpoint_dir;
  fs::create_directories(out_dir);
  fs::create_directories(ckpt_dir);
  write_run_config(out_dir, cfg, {"command = train", "resume = " + a.resume});

  Trainer trainer(std::move(state), std::move(data));
  std::ofstream metrics(out_dir / "metrics.tsv", a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw DataError("cannot write " + (out_dir / "metrics.tsv").string());
  trainer.run(cfg.train.steps, &metrics, [&](const TrainState& s) {
    save_checkpoint(s, ckpt_dir / (numbered("step_", static_cast<std::size_t>(s.step), 8) + ".gemf"));
  });
  save_checkpoint(trainer.state(), ckpt_dir / "final.gemf");
  std::cout << "step\t" << trainer.state().step << "\tcheckpoint\t" << (ckpt_dir / "final.gemf").string() << "\n";
  return 0;
}

struct ReconstructArgs {
  std::string ckpt, manifest, split = "test", out;
  int iters = 500;
  double lr = 1e-2;
  bool lle = false;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const TrainState model = load_model(a.ckpt);
  const Manifest manifest = read_manifest(a.manifest);
  const auto data = load_dataset(manifest);
  const fs::path dir = fs::path(a.out) / a.split;
  write_run_config(a.out, model.config,
                   {"command = reconstruct", "manifest = " + a.manifest, "split = " + a.split,
                    "iters = " + std::to_string(a.iters), "lr = " + fmt(a.lr), "use_lle = " + std::string(a.lle ? "true" : "false")});
  std::ostringstream table;
  table << "id\tstem\tmse\tpsnr\n";
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.data.check(data[i]);
    const auto z = fit_latent(model, observe(data[i]), {a.iters, a.lr, a.lle});
    const double mse = reconstruction_mse(model, z, data[i]);
    total += mse;
    export_bundle(decode_signals(model, z), dir, manifest.entries[i].stem);
    table << i << '\t' << manifest.entries[i].stem << '\t' << fmt(mse) << '\t' << fmt(psnr(mse)) << '\n';
  }
  const double mean = total / static_cast<double>(data.size());
  write_text(dir / "metrics.tsv", table.str());
  std::cout << "mse\t" << fmt(mean) << "\npsnr\t" << fmt(psnr(mean)) << "\n";
  return 0;
}

struct InterpolateArgs {
  std::string ckpt, out;
  Index id_a = 0, id_b = 0;
  int steps = 2;
};

int cmd_interpolate(const InterpolateArgs& a) {
  const TrainState model = load_model(a.ckpt);
  if (a.steps < 2) throw ConfigError("--steps must be >= 2");
  const Tensor<float> za = model.latents.row(checked_id(model, a.id_a, "--id-a"));
  const Tensor<float> zb = model.latents.row(checked_id(model, a.id_b, "--id-b"));
  write_run_config(a.out, model.config,
                   {"command = interpolate", "id_a = " + std::to_string(a.id_a), "id_b = " + std::to_string(a.id_b),
                    "steps = " + std::to_string(a.steps)});
  for (int s = 0; s < a.steps; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(a.steps - 1);
    export_bundle(decode_signals(model, interpolate(za, zb, t)), a.out, numbered("interp_", static_cast<std::size_t>(s), 3));
  }
  std::cout << "exported\t" << a.steps << "\n";
  return 0;
}

struct CompleteArgs {
  std::string ckpt, out;
  std::vector<std::string> inputs, masks;
  int samples = 3;
  std::uint64_t seed = 0;
  int iters = 500;
  double lr = 1e-2;
};

int cmd_complete(const CompleteArgs& a) {
  const TrainState model = load_model(a.ckpt);
  const auto& mods = model.data.modalities;
  if (a.inputs.size() != mods.size()) {
    throw ConfigError("complete: expected " + std::to_string(mods.size()) +
                      " --input values (one per modality, '-' when absent)");
  }
  if (!a.masks.empty() && a.masks.size() != mods.size()) {
    throw ConfigError("complete: --mask must be given once per modality ('-' for fully observed)");
  }
  Observation obs(mods.size());
  for (std::size_t m = 0; m < mods.size(); ++m) {
    if (a.inputs[m] == "-") continue;
    obs[m].present = true;
    obs[m].signal = load_signal(a.inputs[m]);
    const auto& s = obs[m].signal;
    if (s.modality != mods[m].modality) {
      throw DataError("complete: input " + std::to_string(m) + " is " + s.modality + ", model expects " + mods[m].modality);
    }
    const bool masked = !a.masks.empty() && a.masks[m] != "-";
    obs[m].mask = masked ? load_mask(a.masks[m], s.shape) : Mask::full(s.cells());
  }
  write_run_config(a.out, model.config,
                   {"command = complete", "samples = " + std::to_string(a.samples), "seed = " + std::to_string(a.seed),
                    "iters = " + std::to_string(a.iters), "lr = " + fmt(a.lr)});
  const auto results = complete(model, obs, a.samples, a.seed, {a.iters, a.lr, true});
  for (std::size_t i = 0; i < results.size(); ++i) {
    export_bundle(results[i].signals, a.out, numbered("completion_", i, 2));
  }
  std::cout << "exported\t" << results.size() << "\n";
  return 0;
}

struct GenerateArgs {
  std::string ckpt, out;
  int count = 16;
  double beta = -1.0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  const TrainState model = load_model(a.ckpt);
  const double beta = a.beta < 0.0 ? default_beta(model) : a.beta;
  write_run_config(a.out, model.config,
                   {"command = generate", "count = " + std::to_string(a.count), "beta = " + fmt(beta),
                    "seed = " + std::to_string(a.seed)});
  const auto samples = generate(model, a.seed, a.count, beta);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    export_bundle(decode_signals(model, samples[i].latent), a.out, numbered("sample_", i));
  }
  std::ofstream manifest(fs::path(a.out) / "samples.tsv", std::ios::binary);
  write_generation_manifest(samples, manifest);
  std::cout << "exported\t" << samples.size() << "\tbeta\t" << fmt(beta) << "\n";
  return 0;
}

struct NeighborsArgs {
  std::string ckpt;
  Index id = 0;
  Index k = 5;
};

int cmd_neighbors(const NeighborsArgs& a) {
  const TrainState model = load_model(a.ckpt);
  checked_id(model, a.id, "--id");
  if (a.k < 1 || a.k >= model.latents.rows()) {
    throw ConfigError("--k must be in [1, " + std::to_string(model.latents.rows() - 1) + "]");
  }
  std::vector<float> dist;
  const auto idx = nearest_rows(model.latents, model.latents.row(a.id), a.k, a.id, &dist);
  std::cout << "rank\tid\tdistance\n";
  for (std::size_t r = 0; r < idx.size(); ++r) std::cout << r + 1 << '\t' << idx[r] << '\t' << fmt(dist[r]) << '\n';
  return 0;
}

struct ManifestArgs {
  std::string root, out;
  std::vector<std::string> modalities{"image"};
};

int cmd_manifest(const ManifestArgs& a) {
  const Manifest m = build_manifest(a.root, a.modalities);
  write_manifest(m, a.out);
  std::cout << "entries\t" << m.entries.size() << "\n";
  return 0;
}

struct SynthArgs {
  std::string kind = "images", out;
  Index count = 16, side = 16;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  if (a.kind == "images") {
    write_dataset(sinusoid_images(a.count, a.side, a.seed), a.out);
  } else if (a.kind == "pairs") {
    write_dataset(sinusoid_pairs(a.count, a.seed), a.out);
  } else {
    throw ConfigError("synth: --kind must be 'images' or 'pairs'");
  }
  std::cout << "entries\t" << a.count << "\n";
  return 0;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::string line = msg;
  for (char& c : line) {
    if (c == '\n' || c == '\t') c = ' ';
  }
  std::cerr << "error\t" << kind << '\t' << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal-agnostic manifold learning over grid signals"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a model from a config file");
  c_train->add_option("--config", train.config, "key = value config file")->required();
  c_train->add_option("--resume", train.resume, "Checkpoint to continue from");
  c_train->add_option("--set", train.overrides, "Override a config key (key=value); repeatable");

  ReconstructArgs rec;
  auto* c_rec = app.add_subcommand("reconstruct", "Fit latents to unseen signals and export reconstructions");
  c_rec->add_option("--ckpt", rec.ckpt)->required();
  c_rec->add_option("--manifest", rec.manifest)->required();
  c_rec->add_option("--split", rec.split, "Label for the output subdirectory");
  c_rec->add_option("--out", rec.out)->required();
  c_rec->add_option("--iters", rec.iters);
  c_rec->add_option("--lr", rec.lr);
  c_rec->add_flag("--lle", rec.lle, "Add the LLE term while fitting");

  InterpolateArgs interp;
  auto* c_interp = app.add_subcommand("interpolate", "Decode evenly spaced latents between two training signals");
  c_interp->add_option("--ckpt", interp.ckpt)->required();
  c_interp->add_option("--id-a", interp.id_a)->required();
  c_interp->add_option("--id-b", interp.id_b)->required();
  c_interp->add_option("--steps", interp.steps);
  c_interp->add_option("--out", interp.out)->required();

  CompleteArgs comp;
  auto* c_comp = app.add_subcommand("complete", "Masked completion of a partial signal");
  c_comp->add_option("--ckpt", comp.ckpt)->required();
  c_comp->add_option("--input", comp.inputs, "Signal per modality, '-' when absent; repeatable")->required();
  c_comp->add_option("--mask", comp.masks, "Mask per modality, '-' for fully observed; repeatable");
  c_comp->add_option("--samples", comp.samples);
  c_comp->add_option("--seed", comp.seed);
  c_comp->add_option("--iters", comp.iters);
  c_comp->add_option("--lr", comp.lr);
  c_comp->add_option("--out", comp.out)->required();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Sample new signals from the learned manifold");
  c_gen->add_option("--ckpt", gen.ckpt)->required();
  c_gen->add_option("--count", gen.count);
  c_gen->add_option("--beta", gen.beta, "Noise scale (default: 0.1 x mean neighbor distance)");
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--out", gen.out)->required();

  NeighborsArgs nb;
  auto* c_nb = app.add_subcommand("neighbors", "Print the nearest training latents of a training signal");
  c_nb->add_option("--ckpt", nb.ckpt)->required();
  c_nb->add_option("--id", nb.id)->required();
  c_nb->add_option("--k", nb.k);

  ManifestArgs man;
  auto* c_man = app.add_subcommand("manifest", "Build a dataset manifest from a directory");
  c_man->add_option("--root", man.root)->required();
  c_man->add_option("--modality", man.modalities, "Modality to include; repeatable, in order");
  c_man->add_option("--out", man.out)->required();

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Write a synthetic sinusoid dataset");
  c_syn->add_option("--kind", syn.kind, "images | pairs");
  c_syn->add_option("--count", syn.count);
  c_syn->add_option("--side", syn.side);
  c_syn->add_option("--seed", syn.seed);
  c_syn->add_option("--out", syn.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what(), 2);
  }

  try {
    if (*c_train) return cmd_train(train);
    if (*c_rec) return cmd_reconstruct(rec);
    if (*c_interp) return cmd_interpolate(interp);
    if (*c_comp) return cmd_complete(comp);
    if (*c_gen) return cmd_generate(gen);
    if (*c_nb) return cmd_neighbors(nb);
    if (*c_man) return cmd_manifest(man);
    if (*c_syn) return cmd_synth(syn);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const NumericError& e) {
    return fail("numeric", e.what(), 4);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 3);
  } catch (const std::exception& e) {
    return fail("data", e.what(), 3);
  }
  return 0;
}
