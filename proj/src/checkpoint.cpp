#include "benh/checkpoint.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "benh/common.hpp"

namespace benh {

using json = nlohmann::json;

void PipelineConfig::validate() const {
  fn_provider.validate();
  str_provider.validate();
  sem.validate();
}

namespace {

json provider_to_json(const ProviderConfig& p) {
  json j;
  j["kind"] = to_string(p.kind);
  j["dim"] = p.dim;
  j["hash_seed"] = p.hash_seed;
  if (p.external_path) j["external_path"] = *p.external_path;
  return j;
}

ProviderConfig provider_from_json(const json& j) {
  ProviderConfig p;
  p.kind = provider_kind_from_string(j.at("kind").get<std::string>());
  p.dim = j.at("dim").get<uint32_t>();
  p.hash_seed = j.at("hash_seed").get<uint64_t>();
  if (j.contains("external_path")) p.external_path = j["external_path"].get<std::string>();
  return p;
}

json cfg_to_json(const PipelineConfig& c) {
  json j;
  j["fn_provider"] = provider_to_json(c.fn_provider);
  j["str_provider"] = provider_to_json(c.str_provider);
  j["sem"] = {{"d_t", c.sem.d_t},
              {"n_layers", c.sem.n_layers},
              {"n_relations", c.sem.n_relations},
              {"ffn_hidden", c.sem.ffn_hidden},
              {"leaky_slope", c.sem.leaky_slope},
              {"init_scale", c.sem.init_scale},
              {"seed", c.sem.seed}};
  j["md"] = c.md;
  json masked = json::array();
  for (int t = 0; t < kNumEdgeTypes; ++t)
    if (c.eesg.masked[t]) masked.push_back(t);
  j["eesg"] = {{"couse_cap", c.eesg.couse_cap},
               {"su_bidirectional", c.eesg.su_bidirectional},
               {"masked_edge_types", masked}};
  j["whitening"] = {{"rel_eig_floor", c.whitening.rel_eig_floor}, {"pca_slice", c.whitening.pca_slice}};
  j["use_combiner"] = c.use_combiner;
  return j;
}

PipelineConfig cfg_from_json(const json& j) {
  PipelineConfig c;
  c.fn_provider = provider_from_json(j.at("fn_provider"));
  c.str_provider = provider_from_json(j.at("str_provider"));
  const json& s = j.at("sem");
  c.sem.d_t = s.at("d_t").get<uint32_t>();
  c.sem.n_layers = s.at("n_layers").get<uint32_t>();
  c.sem.n_relations = s.at("n_relations").get<uint32_t>();
  c.sem.ffn_hidden = s.at("ffn_hidden").get<uint32_t>();
  c.sem.leaky_slope = s.at("leaky_slope").get<double>();
  c.sem.init_scale = s.at("init_scale").get<double>();
  c.sem.seed = s.at("seed").get<uint64_t>();
  c.md = j.at("md").get<uint32_t>();
  const json& e = j.at("eesg");
  c.eesg.couse_cap = e.at("couse_cap").get<uint32_t>();
  c.eesg.su_bidirectional = e.at("su_bidirectional").get<bool>();
  for (const auto& t : e.at("masked_edge_types")) c.eesg.masked[t.get<int>()] = true;
  const json& w = j.at("whitening");
  c.whitening.rel_eig_floor = w.at("rel_eig_floor").get<double>();
  c.whitening.pca_slice = w.at("pca_slice").get<bool>();
  c.use_combiner = j.at("use_combiner").get<bool>();
  return c;
}

struct TensorRef {
  std::string name;
  std::vector<size_t> shape;
  const double* data;
  size_t count;
};

std::vector<TensorRef> tensor_refs(const Checkpoint& c) {
  std::vector<TensorRef> refs;
  for (auto& [name, span] : param_tensors(const_cast<SemParams&>(c.params))) {
    std::vector<size_t> shape{span.size()};
    refs.push_back({name, shape, span.data(), span.size()});
  }
  refs.push_back({"whiten_fn.mu", {c.whiten_fn.mu.size()}, c.whiten_fn.mu.data(), c.whiten_fn.mu.size()});
  refs.push_back({"whiten_fn.w", {c.whiten_fn.d, c.whiten_fn.d_t}, c.whiten_fn.w.data(), c.whiten_fn.w.size()});
  refs.push_back({"whiten_str.mu", {c.whiten_str.mu.size()}, c.whiten_str.mu.data(), c.whiten_str.mu.size()});
  refs.push_back({"whiten_str.w", {c.whiten_str.d, c.whiten_str.d_t}, c.whiten_str.w.data(), c.whiten_str.w.size()});
  return refs;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  json header;
  header["config"] = cfg_to_json(c.cfg);
  header["whiten_fn"] = {{"d", c.whiten_fn.d}, {"d_t", c.whiten_fn.d_t}, {"eig_floor", c.whiten_fn.eig_floor}};
  header["whiten_str"] = {{"d", c.whiten_str.d}, {"d_t", c.whiten_str.d_t}, {"eig_floor", c.whiten_str.eig_floor}};

  std::vector<TensorRef> refs = tensor_refs(c);
  json dir = json::array();
  uint64_t offset = 0;
  for (const TensorRef& r : refs) {
    dir.push_back({{"name", r.name}, {"shape", r.shape}, {"offset", offset}});
    offset += r.count * 8;
  }
  header["tensors"] = std::move(dir);

  std::string header_bytes = header.dump();
  std::string out;
  out.reserve(16 + header_bytes.size() + offset);
  out += "BENH";
  put_u32le(out, 1);
  put_u64le(out, header_bytes.size());
  out += header_bytes;
  for (const TensorRef& r : refs)
    for (size_t i = 0; i < r.count; ++i) put_f64le(out, r.data[i]);
  return out;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  write_file_atomic(path, serialize_checkpoint(c));
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin) {
  ByteReader r(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size());
  if (r.bytes(4) != "BENH") throw DataError(origin + ": bad magic, expected \"BENH\"");
  uint32_t version = r.u32le();
  if (version != 1)
    throw DataError(origin + ": checkpoint version mismatch: got " + std::to_string(version));
  uint64_t header_len = r.u64le();
  json header;
  try {
    header = json::parse(r.bytes(header_len));
  } catch (const json::exception& e) {
    throw DataError(origin + ": bad checkpoint header: " + e.what());
  }

  Checkpoint c;
  try {
    c.cfg = cfg_from_json(header.at("config"));
    c.whiten_fn.d = header.at("whiten_fn").at("d").get<uint32_t>();
    c.whiten_fn.d_t = header.at("whiten_fn").at("d_t").get<uint32_t>();
    c.whiten_fn.eig_floor = header.at("whiten_fn").at("eig_floor").get<double>();
    c.whiten_str.d = header.at("whiten_str").at("d").get<uint32_t>();
    c.whiten_str.d_t = header.at("whiten_str").at("d_t").get<uint32_t>();
    c.whiten_str.eig_floor = header.at("whiten_str").at("eig_floor").get<double>();
  } catch (const json::exception& e) {
    throw DataError(origin + ": bad checkpoint header: " + e.what());
  }
  c.params = init_params(c.cfg.sem);  // correct shapes; payload overwrites values
  c.whiten_fn.mu.resize(c.whiten_fn.d);
  c.whiten_fn.w.resize(size_t(c.whiten_fn.d) * c.whiten_fn.d_t);
  c.whiten_str.mu.resize(c.whiten_str.d);
  c.whiten_str.w.resize(size_t(c.whiten_str.d) * c.whiten_str.d_t);

  std::vector<TensorRef> refs = tensor_refs(c);
  const json& dir = header.at("tensors");
  if (dir.size() != refs.size())
    throw DataError(origin + ": tensor directory has " + std::to_string(dir.size()) +
                    " entries, expected " + std::to_string(refs.size()));
  const size_t payload_base = r.pos();
  for (size_t i = 0; i < refs.size(); ++i) {
    const json& entry = dir[i];
    if (entry.at("name").get<std::string>() != refs[i].name)
      throw DataError(origin + ": tensor " + std::to_string(i) + " is \"" +
                      entry.at("name").get<std::string>() + "\", expected \"" + refs[i].name + "\"");
    uint64_t offset = entry.at("offset").get<uint64_t>();
    if (payload_base + offset + refs[i].count * 8 > bytes.size())
      throw DataError(origin + ": tensor \"" + refs[i].name + "\" extends past end of file");
    ByteReader tr(reinterpret_cast<const uint8_t*>(bytes.data()) + payload_base + offset,
                  refs[i].count * 8);
    double* dst = const_cast<double*>(refs[i].data);
    for (size_t k = 0; k < refs[i].count; ++k) {
      double v = tr.f64le();
      if (!std::isfinite(v))
        throw DataError(origin + ": non-finite value in tensor \"" + refs[i].name + "\"");
      dst[k] = v;
    }
  }
  return c;
}

Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_file(path), path);
}

}  // namespace benh
