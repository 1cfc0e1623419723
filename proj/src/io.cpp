#include "glv/io.hpp"

#include <fstream>

namespace glv {

void save_field(const Field2D& f, const std::string& data_path,
                const std::string& sidecar_path, const std::string& profile_hash) {
    {
        std::ofstream os(data_path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + data_path);
        std::vector<float> buf(2 * f.w.size());
        for (std::size_t k = 0; k < f.w.size(); ++k) {
            buf[2 * k] = static_cast<float>(f.w[k].real());
            buf[2 * k + 1] = static_cast<float>(f.w[k].imag());
        }
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    Json sidecar{{"format", "glv-field"},
                 {"version", 1},
                 {"half_width", f.grid().half_width},
                 {"n", f.grid().n},
                 {"phase", f.phase},
                 {"dtype", "complex64"},
                 {"order", "row-major"},
                 {"profile_hash", profile_hash},
                 {"data_file", data_path.substr(data_path.find_last_of('/') + 1)}};
    write_json_file(sidecar_path, sidecar);
}

Field2D load_field(VortexTablePtr table, const std::string& sidecar_path) {
    const Json sc = read_json_file(sidecar_path);
    if (sc.at("format") != "glv-field" || sc.at("version") != 1)
        throw std::runtime_error("load_field: unsupported snapshot format");
    const Grid2D& g = table->grid;
    if (sc.at("n").get<int>() != g.n ||
        std::abs(sc.at("half_width").get<double>() - g.half_width) > 1e-12)
        throw std::invalid_argument("load_field: snapshot grid does not match the table");
    Field2D f = Field2D::vacuum(std::move(table));
    f.phase = sc.at("phase").get<double>();
    const std::string dir = sidecar_path.substr(0, sidecar_path.find_last_of('/') + 1);
    const std::string data_path = dir + sc.at("data_file").get<std::string>();
    std::ifstream is(data_path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + data_path);
    std::vector<float> buf(2 * g.size());
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw std::runtime_error("load_field: truncated data file");
    for (std::size_t k = 0; k < g.size(); ++k)
        f.w[k] = Complex{buf[2 * k], buf[2 * k + 1]};
    return f;
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << j.dump(2) << "\n";
}

Json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return Json::parse(is);
}

struct CsvWriter::Impl {
    std::ofstream os;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::string>& comment_lines)
    : impl_(new Impl) {
    impl_->os.open(path);
    if (!impl_->os) throw std::runtime_error("cannot open " + path);
    for (const auto& c : comment_lines) impl_->os << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
        impl_->os << header[i] << (i + 1 < header.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        impl_->os << fmt17(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() { delete impl_; }

}  // namespace glv
