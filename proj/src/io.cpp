#include "cathtrack/io.hpp"

#include "cathtrack/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cathtrack {

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open file: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (first) {
            table.header = cells;
            first = false;
        } else {
            table.rows.push_back(cells);
        }
    }
    require(!table.header.empty(), ErrorCode::io, "empty CSV: " + path);
    return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write file: " + path);
    const auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        require(used == s.size(), ErrorCode::io, context + ": bad number \"" + s + "\"");
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::io, context + ": bad number \"" + s + "\"");
    }
}

}  // namespace

void write_pgm(const std::string& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot write file: " + path);
    out << "P5\n";
    out << "# pixel_scale_mm " << format_double(image.pixel_scale) << "\n";
    out << "# origin_mm " << format_double(image.origin.x()) << " "
        << format_double(image.origin.y()) << "\n";
    out << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.intensities.data()),
              static_cast<std::streamsize>(image.intensities.size()));
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open file: " + path);
    std::string magic;
    in >> magic;
    require(magic == "P5", ErrorCode::io, "not a binary PGM: " + path);

    GrayImage image;
    int maxval = 0;
    std::vector<int> numbers;
    while (numbers.size() < 3) {
        in >> std::ws;
        if (in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
            std::stringstream ss(comment.substr(1));
            std::string tag;
            ss >> tag;
            if (tag == "pixel_scale_mm") ss >> image.pixel_scale;
            if (tag == "origin_mm") ss >> image.origin.x() >> image.origin.y();
            continue;
        }
        int value = 0;
        require(static_cast<bool>(in >> value), ErrorCode::io, "truncated PGM header: " + path);
        numbers.push_back(value);
    }
    image.width = numbers[0];
    image.height = numbers[1];
    maxval = numbers[2];
    require(maxval == 255, ErrorCode::io, "PGM must be 8-bit: " + path);
    in.get();  // single whitespace after maxval
    image.intensities.resize(static_cast<std::size_t>(image.width) * image.height);
    in.read(reinterpret_cast<char*>(image.intensities.data()),
            static_cast<std::streamsize>(image.intensities.size()));
    require(in.gcount() == static_cast<std::streamsize>(image.intensities.size()), ErrorCode::io,
            "truncated PGM data: " + path);
    return image;
}

void write_planar_markers_csv(const std::string& path, const PlanarMarkers& markers,
                              Plane plane) {
    CsvTable table;
    table.header = {"id", "plane", "x_mm", "y_mm"};
    const std::string plane_name = plane == Plane::front ? "front" : "side";
    const auto row = [&](const std::string& id, const Vec2& p) {
        table.rows.push_back({id, plane_name, format_double(p.x()), format_double(p.y())});
    };
    row("base_prime", markers.base_prime);
    row("base", markers.base);
    for (const auto& p : markers.intermediates) row("int", p);
    row("tip", markers.tip);
    write_csv(path, table);
}

PlanarMarkers read_planar_markers_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int id_col = table.column("id");
    const int x_col = table.column("x_mm");
    const int y_col = table.column("y_mm");
    require(id_col >= 0 && x_col >= 0 && y_col >= 0, ErrorCode::io,
            path + ": expected columns id,x_mm,y_mm");
    PlanarMarkers markers;
    bool have_bp = false, have_b = false, have_tip = false;
    for (const auto& row : table.rows) {
        const std::string& id = row[static_cast<std::size_t>(id_col)];
        const Vec2 p(parse_double(row[static_cast<std::size_t>(x_col)], path),
                     parse_double(row[static_cast<std::size_t>(y_col)], path));
        if (id == "base_prime") {
            markers.base_prime = p;
            have_bp = true;
        } else if (id == "base") {
            markers.base = p;
            have_b = true;
        } else if (id == "tip") {
            markers.tip = p;
            have_tip = true;
        } else {
            markers.intermediates.push_back(p);
        }
    }
    require(have_bp && have_b && have_tip, ErrorCode::io,
            path + ": missing base_prime/base/tip rows");
    return markers;
}

void write_detections_csv(const std::string& path, const MarkerDetections& detections) {
    CsvTable table;
    table.header = {"label", "x_mm", "y_mm", "area_px2"};
    for (const auto& d : detections.items)
        table.rows.push_back({marker_label_name(d.label), format_double(d.centroid.x()),
                              format_double(d.centroid.y()), format_double(d.area)});
    write_csv(path, table);
}

MarkerDetections read_detections_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int label_col = table.column("label");
    const int x_col = table.column("x_mm");
    const int y_col = table.column("y_mm");
    const int area_col = table.column("area_px2");
    require(label_col >= 0 && x_col >= 0 && y_col >= 0 && area_col >= 0, ErrorCode::io,
            path + ": expected columns label,x_mm,y_mm,area_px2");
    MarkerDetections det;
    for (const auto& row : table.rows) {
        Detection d;
        const auto label = marker_label_from_name(row[static_cast<std::size_t>(label_col)]);
        require(label.has_value(), ErrorCode::io,
                path + ": unknown label \"" + row[static_cast<std::size_t>(label_col)] + "\"");
        d.label = *label;
        d.centroid = {parse_double(row[static_cast<std::size_t>(x_col)], path),
                      parse_double(row[static_cast<std::size_t>(y_col)], path)};
        d.area = parse_double(row[static_cast<std::size_t>(area_col)], path);
        det.items.push_back(d);
    }
    return det;
}

void write_world_markers_csv(const std::string& path, const OrderedMarkerSet& set) {
    CsvTable table;
    table.header = {"index", "present", "X", "Y", "Z"};
    const auto row = [&](const std::string& index, bool present, const Vec3& p) {
        table.rows.push_back({index, present ? "1" : "0",
                              format_double(present ? p.x() : std::nan("")),
                              format_double(present ? p.y() : std::nan("")),
                              format_double(present ? p.z() : std::nan(""))});
    };
    row("base_prime", true, set.base_prime);
    row("base", true, set.base);
    for (std::size_t i = 0; i < set.markers.size(); ++i)
        row("m" + std::to_string(i + 1), set.present[i], set.markers[i]);
    row("tip", true, set.tip);
    write_csv(path, table);
}

OrderedMarkerSet read_world_markers_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int idx_col = table.column("index");
    const int present_col = table.column("present");
    const int x_col = table.column("X");
    const int y_col = table.column("Y");
    const int z_col = table.column("Z");
    require(idx_col >= 0 && present_col >= 0 && x_col >= 0 && y_col >= 0 && z_col >= 0,
            ErrorCode::io, path + ": expected columns index,present,X,Y,Z");

    OrderedMarkerSet set;
    bool have_bp = false, have_b = false, have_tip = false;
    std::vector<std::pair<int, std::pair<bool, Vec3>>> markers;
    for (const auto& row : table.rows) {
        const std::string& index = row[static_cast<std::size_t>(idx_col)];
        const bool present = row[static_cast<std::size_t>(present_col)] == "1";
        Vec3 p = Vec3::Zero();
        if (present)
            p = {parse_double(row[static_cast<std::size_t>(x_col)], path),
                 parse_double(row[static_cast<std::size_t>(y_col)], path),
                 parse_double(row[static_cast<std::size_t>(z_col)], path)};
        if (index == "base_prime") {
            set.base_prime = p;
            have_bp = true;
        } else if (index == "base") {
            set.base = p;
            have_b = true;
        } else if (index == "tip") {
            set.tip = p;
            have_tip = true;
        } else {
            require(index.size() > 1 && index[0] == 'm', ErrorCode::io,
                    path + ": unknown index \"" + index + "\"");
            markers.push_back({std::stoi(index.substr(1)), {present, p}});
        }
    }
    require(have_bp && have_b && have_tip, ErrorCode::io,
            path + ": missing base_prime/base/tip rows");
    std::sort(markers.begin(), markers.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [slot, value] : markers) {
        (void)slot;
        set.present.push_back(value.first);
        set.markers.push_back(value.second);
    }
    const double gap = (set.base - set.base_prime).norm();
    require(gap > 1e-9, ErrorCode::numeric, path + ": base bands coincide");
    set.base_tangent = (set.base - set.base_prime) / gap;
    return set;
}

void write_backbone_csv(const std::string& path, const BackbonePath& path_samples) {
    CsvTable table;
    table.header = {"s_mm", "x_mm", "y_mm", "z_mm", "tx", "ty", "tz"};
    for (const auto& f : path_samples.samples) {
        const Vec3 t = f.tangent();
        table.rows.push_back({format_double(f.s), format_double(f.position.x()),
                              format_double(f.position.y()), format_double(f.position.z()),
                              format_double(t.x()), format_double(t.y()), format_double(t.z())});
    }
    write_csv(path, table);
}

namespace {

const char* variant_name(TrialVariant v) {
    return v == TrialVariant::control ? "control" : "dropped";
}

}  // namespace

void write_trials_csv(const std::string& path, const StudyResult& result) {
    CsvTable table;
    table.header = {"design_index", "x",  "config_index", "order",  "variant",
                    "ep_pct",       "er_deg", "converged",    "failed", "failure"};
    for (const auto& t : result.trials)
        table.rows.push_back({std::to_string(t.design_index), format_double(t.x),
                              std::to_string(t.config_index), std::to_string(t.order),
                              variant_name(t.variant), format_double(100.0 * t.ep_norm),
                              format_double(t.er_deg), t.converged ? "1" : "0",
                              t.failed ? "1" : "0", t.failure});
    write_csv(path, table);
}

void write_plotdata_csv(const std::string& path, const StudyResult& result) {
    CsvTable table;
    table.header = {"x",          "order",      "variant",     "ep_mean_pct",
                    "ep_sd_pct",  "er_mean_deg", "er_sd_deg"};
    for (const auto& p : result.points)
        table.rows.push_back({format_double(p.x), std::to_string(p.order),
                              variant_name(p.variant), format_double(100.0 * p.ep_mean),
                              format_double(100.0 * p.ep_sd), format_double(p.er_mean),
                              format_double(p.er_sd)});
    write_csv(path, table);
}

Json study_summary_json(const StudyConfig& cfg, const StudyResult& result) {
    Json j;
    j["type"] = "study_summary";
    j["kind"] = study_kind_name(result.kind);
    j["master_seed"] = cfg.master_seed;
    j["configurations_per_design"] = cfg.configurations_per_design;
    j["noise_front_mm"] = cfg.noise_front;
    j["noise_side_mm"] = cfg.noise_side;
    Json points = Json::array();
    for (const auto& p : result.points) {
        points.push_back({{"design_index", p.design_index},
                          {"x", p.x},
                          {"order", p.order},
                          {"variant", variant_name(p.variant)},
                          {"marker_count", p.marker_count},
                          {"spacing_mm", p.spacing},
                          {"ep_mean_pct", 100.0 * p.ep_mean},
                          {"ep_sd_pct", 100.0 * p.ep_sd},
                          {"er_mean_deg", p.er_mean},
                          {"er_sd_deg", p.er_sd},
                          {"trials", p.trials},
                          {"failures", p.failures},
                          {"flagged", p.flagged}});
    }
    j["points"] = points;
    return j;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open file: " + path);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    char c;
    while (in.get(c)) {
        hash ^= static_cast<std::uint8_t>(c);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    require(!ec, ErrorCode::io, "cannot create directory: " + path);
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& config_paths, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
    Json j;
    j["type"] = "run_manifest";
    j["tool_version"] = kVersion;
    j["command"] = command;
    std::uint64_t hash = 0xcbf29ce484222325ull;
    Json configs = Json::array();
    for (const auto& path : config_paths) {
        const std::uint64_t file_hash = fnv1a_file(path);
        hash ^= file_hash;
        hash *= 0x100000001b3ull;
        configs.push_back({{"path", path}, {"fnv1a", file_hash}});
    }
    j["configs"] = configs;
    j["config_hash"] = hash;
    j["master_seed"] = seed;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%FT%TZ", std::gmtime(&now));
    j["timestamp"] = stamp;
    j["outputs"] = outputs;
    save_json_file(out_dir + "/manifest.json", j);
}

}  // namespace cathtrack
