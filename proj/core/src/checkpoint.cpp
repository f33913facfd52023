#include "groundsel/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "groundsel/error.hpp"

namespace groundsel {

namespace {
constexpr const char* kHeader = "groundsel-checkpoint 1";
}

void save_checkpoint(const std::string& path, const ParamMap& params) {
  std::ostringstream out;
  out << kHeader << "\n";
  char buf[40];
  for (const auto& [name, t] : params.items()) {
    out << name << " " << t.rank();
    for (size_t d = 0; d < t.rank(); ++d) out << " " << t.dim(static_cast<int>(d));
    out << "\n";
    std::span<const double> values = t.data();
    for (int64_t i = 0; i < t.size(); ++i) {
      // %a round-trips doubles exactly and stays byte-stable across runs.
      std::snprintf(buf, sizeof(buf), "%a", values[static_cast<size_t>(i)]);
      if (i) out << ' ';
      out << buf;
    }
    out << "\n";
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  const std::string text = out.str();
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("short write to checkpoint: " + path);
}

void load_checkpoint(const std::string& path, ParamMap& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(f, line) || line != kHeader) {
    throw IoError("checkpoint " + path + " missing '" + kHeader + "' header");
  }

  std::set<std::string> seen;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream meta(line);
    std::string name;
    size_t rank = 0;
    if (!(meta >> name >> rank) || rank > 2) {
      throw IoError("checkpoint " + path + ": malformed descriptor line '" + line + "'");
    }
    std::vector<int64_t> dims(rank);
    for (size_t d = 0; d < rank; ++d) {
      if (!(meta >> dims[d]) || dims[d] <= 0) {
        throw IoError("checkpoint " + path + ": bad dimensions for '" + name + "'");
      }
    }
    Tensor* t = params.find(name);
    if (t == nullptr) {
      throw IoError("checkpoint " + path + " names unknown parameter '" + name + "'");
    }
    if (t->rank() != rank) {
      throw IoError("checkpoint " + path + ": parameter '" + name + "' has rank " +
                    std::to_string(rank) + ", expected " + std::to_string(t->rank()));
    }
    for (size_t d = 0; d < rank; ++d) {
      if (t->dim(static_cast<int>(d)) != dims[d]) {
        throw IoError("checkpoint " + path + ": parameter '" + name + "' shape mismatch at axis " +
                      std::to_string(d) + " (" + std::to_string(dims[d]) + " vs " +
                      std::to_string(t->dim(static_cast<int>(d))) + ")");
      }
    }
    if (!seen.insert(name).second) {
      throw IoError("checkpoint " + path + " repeats parameter '" + name + "'");
    }

    if (!std::getline(f, line)) {
      throw IoError("checkpoint " + path + ": missing values for '" + name + "'");
    }
    std::span<double> dst = t->mutable_data();
    const char* cursor = line.c_str();
    for (int64_t i = 0; i < t->size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(cursor, &end);
      if (end == cursor) {
        throw IoError("checkpoint " + path + ": parameter '" + name + "' has " +
                      std::to_string(i) + " values, expected " + std::to_string(t->size()));
      }
      dst[static_cast<size_t>(i)] = v;
      cursor = end;
    }
    char* end = nullptr;
    std::strtod(cursor, &end);
    if (end != cursor) {
      throw IoError("checkpoint " + path + ": parameter '" + name + "' has extra values beyond " +
                    std::to_string(t->size()));
    }
  }

  for (const auto& [name, t] : params.items()) {
    if (!seen.count(name)) {
      throw IoError("checkpoint " + path + " is missing parameter '" + name + "'");
    }
  }
}

}  // namespace groundsel
