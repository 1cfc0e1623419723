#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "glv/field.hpp"

namespace glv {

using Json = nlohmann::ordered_json;

// Field snapshot: flat binary of w as row-major float32 (re, im) pairs plus a
// JSON sidecar carrying the grid and provenance.
void save_field(const Field2D& f, const std::string& data_path,
                const std::string& sidecar_path, const std::string& profile_hash);
Field2D load_field(VortexTablePtr table, const std::string& sidecar_path);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

// Minimal CSV writer; all floating-point cells use 17 significant digits.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::string>& comment_lines = {});
    void row(const std::vector<double>& values);
    ~CsvWriter();

  private:
    struct Impl;
    Impl* impl_;
};

}  // namespace glv
