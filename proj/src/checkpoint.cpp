#include "icps/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "icps/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace icps {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (in.gcount() != 4) throw CorruptCheckpoint("unexpected end of file");
  return v;
}

std::string config_text(const CnnModel& m, const CheckpointMeta& meta) {
  ordered_json j;
  j["kind"] = m.kind == ModelKind::Classifier ? "classifier" : "regressor";
  j["input_h"] = m.input_h;
  j["input_w"] = m.input_w;
  j["conv_filters"] = m.conv_filters;
  j["dense_widths"] = m.dense_widths;
  j["dropout_rate"] = m.dropout_rate;
  j["batchnorm"] = m.use_batchnorm;
  if (m.kind == ModelKind::Classifier) {
    j["num_classes"] = m.outputs;
    j["scene_names"] = meta.scene_names;
  } else {
    j["dropconnect_rate"] = m.dropconnect_rate;
    j["activity_lambda"] = m.activity_lambda;
    j["beta"] = m.beta;
    j["scene_id"] = meta.scene_id;
    j["scene_name"] = meta.scene_name;
    if (meta.norm_bounds) {
      j["bounds_min"] = {meta.norm_bounds->min.x, meta.norm_bounds->min.y,
                         meta.norm_bounds->min.z};
      j["bounds_max"] = {meta.norm_bounds->max.x, meta.norm_bounds->max.y,
                         meta.norm_bounds->max.z};
    }
  }
  return j.dump();
}

// Every tensor that must survive a round trip: trainable parameters plus
// batch-norm running statistics.
std::vector<std::pair<std::string, std::vector<double>*>> state_tensors(
    CnnModel& m) {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  for (auto& [name, t] : m.named_params()) out.emplace_back(name, &t->values);
  for (std::size_t i = 0; i < m.conv.size(); ++i) {
    if (!m.use_batchnorm) break;
    const std::string p = "conv" + std::to_string(i) + ".";
    out.emplace_back(p + "bn_run_mean", &m.conv[i].stats.mean);
    out.emplace_back(p + "bn_run_var", &m.conv[i].stats.var);
  }
  for (std::size_t i = 0; i < m.hidden.size(); ++i) {
    if (!m.use_batchnorm) break;
    const std::string p = "dense" + std::to_string(i) + ".";
    out.emplace_back(p + "bn_run_mean", &m.hidden[i].stats.mean);
    out.emplace_back(p + "bn_run_var", &m.hidden[i].stats.var);
  }
  return out;
}

}  // namespace

void save_checkpoint(const CnnModel& model, const CheckpointMeta& meta,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write checkpoint: " + path);
  out.write("ICPS", 4);
  write_u32(out, kCheckpointVersion);
  const char kind = static_cast<char>(model.kind);
  out.write(&kind, 1);
  const std::string cfg = config_text(model, meta);
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  auto& m = const_cast<CnnModel&>(model);  // state_tensors needs mutable access
  for (const auto& [name, values] : state_tensors(m)) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    // dims: parameters keep their true shape, stats are rank-1
    std::vector<std::uint32_t> dims;
    bool found = false;
    for (const auto& [pname, t] : m.named_params()) {
      if (pname == name) {
        for (auto d : t->shape) dims.push_back(static_cast<std::uint32_t>(d));
        found = true;
        break;
      }
    }
    if (!found) dims.push_back(static_cast<std::uint32_t>(values->size()));
    write_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (std::uint32_t d : dims) write_u32(out, d);
    out.write(reinterpret_cast<const char*>(values->data()),
              static_cast<std::streamsize>(values->size() * sizeof(double)));
  }
  if (!out) throw IoFailure("short write: " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "ICPS", 4) != 0)
    throw CorruptCheckpoint("bad magic");
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw VersionMismatch("unsupported checkpoint version " +
                          std::to_string(version));
  char kind_byte = 0;
  in.read(&kind_byte, 1);
  if (in.gcount() != 1) throw CorruptCheckpoint("unexpected end of file");
  if (kind_byte != static_cast<char>(ModelKind::Classifier) &&
      kind_byte != static_cast<char>(ModelKind::Regressor))
    throw CorruptCheckpoint("unknown model kind byte");
  const ModelKind kind = static_cast<ModelKind>(kind_byte);

  const std::uint32_t cfg_len = read_u32(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (in.gcount() != static_cast<std::streamsize>(cfg_len))
    throw CorruptCheckpoint("truncated config text");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(cfg_text);
  } catch (const nlohmann::json::exception&) {
    throw CorruptCheckpoint("config text is not valid JSON");
  }

  LoadedModel loaded;
  try {
    if (kind == ModelKind::Classifier) {
      ClassifierConfig cfg;
      cfg.input_h = j.at("input_h");
      cfg.input_w = j.at("input_w");
      cfg.num_classes = j.at("num_classes");
      cfg.conv_filters = j.at("conv_filters").get<std::vector<int>>();
      cfg.dense_widths = j.at("dense_widths").get<std::vector<int>>();
      cfg.dropout_rate = j.at("dropout_rate");
      cfg.batchnorm = j.at("batchnorm");
      loaded.model = build_classifier(cfg, 0);
      loaded.meta.scene_names =
          j.at("scene_names").get<std::vector<std::string>>();
    } else {
      RegressorConfig cfg;
      cfg.input_h = j.at("input_h");
      cfg.input_w = j.at("input_w");
      cfg.conv_filters = j.at("conv_filters").get<std::vector<int>>();
      cfg.dense_widths = j.at("dense_widths").get<std::vector<int>>();
      cfg.dropout_rate = j.at("dropout_rate");
      cfg.dropconnect_rate = j.at("dropconnect_rate");
      cfg.activity_lambda = j.at("activity_lambda");
      cfg.beta = j.at("beta");
      cfg.batchnorm = j.at("batchnorm");
      loaded.model = build_regressor(cfg, 0);
      loaded.meta.scene_id = j.at("scene_id");
      loaded.meta.scene_name = j.at("scene_name");
      if (j.contains("bounds_min")) {
        NormalizationBounds b;
        b.min = {j["bounds_min"][0], j["bounds_min"][1], j["bounds_min"][2]};
        b.max = {j["bounds_max"][0], j["bounds_max"][1], j["bounds_max"][2]};
        loaded.meta.norm_bounds = b;
      }
    }
  } catch (const nlohmann::json::exception&) {
    throw CorruptCheckpoint("config text is missing fields");
  }

  auto targets = state_tensors(loaded.model);
  std::vector<bool> filled(targets.size(), false);
  for (;;) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), 4);
    if (in.gcount() == 0) break;  // clean EOF at a record boundary
    if (in.gcount() != 4) throw CorruptCheckpoint("truncated record");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len))
      throw CorruptCheckpoint("truncated record name");
    const std::uint32_t rank = read_u32(in);
    if (rank > 8) throw CorruptCheckpoint("implausible tensor rank");
    std::uint64_t count = 1;
    std::vector<std::uint32_t> dims(rank);
    for (std::uint32_t r = 0; r < rank; ++r) {
      dims[r] = read_u32(in);
      count *= dims[r];
    }
    std::size_t target = targets.size();
    for (std::size_t t = 0; t < targets.size(); ++t)
      if (targets[t].first == name) target = t;
    if (target == targets.size())
      throw CorruptCheckpoint("unknown tensor name: " + name);
    if (filled[target]) throw CorruptCheckpoint("duplicate tensor: " + name);
    if (targets[target].second->size() != count)
      throw ShapeMismatch("tensor " + name + " does not match the config");
    in.read(reinterpret_cast<char*>(targets[target].second->data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
      throw CorruptCheckpoint("truncated tensor values: " + name);
    filled[target] = true;
  }
  for (std::size_t t = 0; t < targets.size(); ++t)
    if (!filled[t])
      throw CorruptCheckpoint("missing tensor: " + targets[t].first);
  return loaded;
}

LoadedModel load_checkpoint(const std::string& path, ModelKind expected) {
  LoadedModel loaded = load_checkpoint(path);
  if (loaded.model.kind != expected)
    throw ModelKindMismatch("checkpoint holds a different model kind");
  return loaded;
}

}  // namespace icps
