#include "itoo/ingest/labels.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "itoo/core/errors.hpp"

namespace itoo {

namespace {

template <typename T>
T parse_number(const std::string& field, std::uint64_t lineno) {
    T v{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("labels: invalid number '" + field + "'", lineno);
    }
    return v;
}

}  // namespace

std::vector<LabeledImage> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open labels file " + path.string());
    std::vector<LabeledImage> out;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("image_id", 0) == 0) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() < 2 || fields.size() > 3) throw ParseError("labels: expected image_id,class_id[,source]", lineno);
        LabeledImage l;
        l.image_id = parse_number<ImageId>(fields[0], lineno);
        l.class_id = parse_number<ClassId>(fields[1], lineno);
        if (fields.size() == 3) l.source = fields[2];
        out.push_back(std::move(l));
    }
    return out;
}

void save_labels(const std::filesystem::path& path, const std::vector<LabeledImage>& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write labels file " + path.string());
    out << "image_id,class_id,source\n";
    for (const auto& l : labels) out << l.image_id << ',' << l.class_id << ',' << l.source << '\n';
}

}  // namespace itoo
