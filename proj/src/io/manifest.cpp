#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hazelab/io.hpp"

namespace hazelab::io {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \r") - b + 1);
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path, ManifestKind kind) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open manifest");
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    Manifest m;
    m.kind = kind;
    std::set<std::string> seen;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto err = [&](const std::string& what) {
            return std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
        };
        auto fields = split_tabs(line);
        for (auto& f : fields) f = trim(f);
        if (fields.size() > 4) throw err("expected at most 4 tab-separated fields, got " + std::to_string(fields.size()));
        if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) throw err("missing id or hazy path");

        ManifestEntry e;
        e.id = fields[0];
        e.hazy = resolve(fields[1]);
        e.line = lineno;
        if (fields.size() > 2 && !fields[2].empty()) e.clear = resolve(fields[2]);
        if (fields.size() > 3 && !fields[3].empty()) e.depth = resolve(fields[3]);

        if (!seen.insert(e.id).second) throw err("duplicate id '" + e.id + "'");
        if (kind == ManifestKind::kLabeled && !e.clear) throw err("labeled entry '" + e.id + "' has no clear path");
        for (const auto* p : {&e.hazy, e.clear ? &*e.clear : nullptr, e.depth ? &*e.depth : nullptr}) {
            if (p && !std::filesystem::exists(*p)) throw err("missing file " + p->string());
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw std::runtime_error(path.string() + ": empty manifest");
    return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot write manifest");
    out << "# id\thazy\tclear\tdepth\n";
    const std::filesystem::path base = path.parent_path();
    auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base).generic_string(); };
    for (const auto& e : manifest.entries) {
        out << e.id << '\t' << rel(e.hazy);
        if (e.clear || e.depth) out << '\t' << (e.clear ? rel(*e.clear) : "");
        if (e.depth) out << '\t' << rel(*e.depth);
        out << '\n';
    }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<train::LabeledPair> load_labeled(const Manifest& manifest) {
    std::vector<train::LabeledPair> out;
    for (const auto& e : manifest.entries) {
        if (!e.clear) throw std::invalid_argument("entry '" + e.id + "' has no clear image");
        out.push_back({e.id, load_image(e.hazy), load_image(*e.clear)});
        if (!(out.back().hazy.shape() == out.back().clear.shape())) {
            throw std::runtime_error("entry '" + e.id + "': hazy and clear images differ in size");
        }
    }
    return out;
}

std::vector<train::UnlabeledImage> load_unlabeled(const Manifest& manifest) {
    std::vector<train::UnlabeledImage> out;
    for (const auto& e : manifest.entries) out.push_back({e.id, load_image(e.hazy)});
    return out;
}

}  // namespace hazelab::io
