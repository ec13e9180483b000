#include "trifuse/checkpoint.hpp"

#include <cstring>
#include <filesystem>

#include "json.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/util.hpp"

namespace trifuse {

namespace {

std::string blob_path_for(const std::string& manifest_path) { return manifest_path + ".f32"; }

// The manifest stores only the blob's basename so directories stay
// relocatable; the blob always lives next to its manifest.
std::string blob_name_for(const std::string& manifest_path) {
  return std::filesystem::path(blob_path_for(manifest_path)).filename().string();
}

std::string resolve_blob(const std::string& manifest_path, const std::string& blob_name) {
  return (std::filesystem::path(manifest_path).parent_path() / blob_name).string();
}

std::string section_of(const std::string& name) {
  size_t dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

void save_checkpoint(const std::string& manifest_path, const ParamStore& store,
                     const std::map<std::string, std::string>& meta) {
  std::string blob;
  nlohmann::json params = nlohmann::json::array();
  std::map<std::string, int> sections;
  size_t cursor = 0;
  for (const std::string& name : store.names()) {
    TensorPtr t = store.get(name);
    params.push_back({{"name", name}, {"rows", t->rows}, {"cols", t->cols}, {"offset", cursor}});
    size_t bytes = t->numel() * sizeof(float);
    blob.append(reinterpret_cast<const char*>(t->v()), bytes);
    cursor += t->numel();
    ++sections[section_of(name)];
  }

  nlohmann::json manifest = {
      {"format", "f32le"},
      {"meta", meta},
      {"sections", sections},
      {"params", params},
      {"blob", blob_name_for(manifest_path)},
  };
  write_file(manifest_path, manifest.dump(2) + "\n");
  write_file(blob_path_for(manifest_path), blob);
}

std::vector<std::string> load_checkpoint(const std::string& manifest_path, ParamStore& store) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("bad checkpoint manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "f32le") throw IntegrityError("unknown checkpoint format");
  std::string blob = read_file(resolve_blob(manifest_path, manifest.at("blob").get<std::string>()));

  std::vector<std::string> loaded;
  for (const auto& entry : manifest.at("params")) {
    std::string name = entry.at("name").get<std::string>();
    if (!store.contains(name)) throw IntegrityError("checkpoint has unknown parameter: " + name);
    TensorPtr t = store.get(name);
    int rows = entry.at("rows").get<int>();
    int cols = entry.at("cols").get<int>();
    if (rows != t->rows || cols != t->cols) {
      throw IntegrityError("shape mismatch for " + name + ": checkpoint " + std::to_string(rows) +
                           "x" + std::to_string(cols) + ", model " + std::to_string(t->rows) + "x" +
                           std::to_string(t->cols));
    }
    size_t offset = entry.at("offset").get<size_t>();
    size_t count = t->numel();
    if ((offset + count) * sizeof(float) > blob.size()) {
      throw IntegrityError("checkpoint blob shorter than manifest claims");
    }
    std::memcpy(t->v(), blob.data() + offset * sizeof(float), count * sizeof(float));
    loaded.push_back(std::move(name));
  }
  return loaded;
}

std::map<std::string, std::string> checkpoint_meta(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("bad checkpoint manifest: ") + e.what());
  }
  std::map<std::string, std::string> meta;
  nlohmann::json meta_json = manifest.value("meta", nlohmann::json::object());
  for (const auto& [k, v] : meta_json.items()) meta[k] = v.get<std::string>();
  return meta;
}

}  // namespace trifuse
