#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cathtrack/config.hpp"
#include "cathtrack/imaging.hpp"
#include "cathtrack/kinematics.hpp"
#include "cathtrack/reconstruction.hpp"
#include "cathtrack/studies.hpp"

namespace cathtrack {

// --- generic CSV ---
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);
std::string format_double(double v);  // round-trip exact

// --- PGM (binary, 8-bit) with pixel scale and origin carried in comments ---
void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_pgm(const std::string& path);

// --- domain CSV schemas ---
// Planar observations: id,plane,x_mm,y_mm with id in
// {base_prime, base, tip, int}.
void write_planar_markers_csv(const std::string& path, const PlanarMarkers& markers,
                              Plane plane);
PlanarMarkers read_planar_markers_csv(const std::string& path);

// Segmentation output: label,x_mm,y_mm,area_px2.
void write_detections_csv(const std::string& path, const MarkerDetections& detections);
MarkerDetections read_detections_csv(const std::string& path);

// Reconstruction output: index,present,X,Y,Z with index in
// {base_prime, base, m1..mN, tip}. Missing markers carry nan coordinates.
void write_world_markers_csv(const std::string& path, const OrderedMarkerSet& set);
OrderedMarkerSet read_world_markers_csv(const std::string& path);

// Backbone samples: s_mm,x_mm,y_mm,z_mm,tx,ty,tz.
void write_backbone_csv(const std::string& path, const BackbonePath& path_samples);

// Study outputs.
void write_trials_csv(const std::string& path, const StudyResult& result);
void write_plotdata_csv(const std::string& path, const StudyResult& result);
Json study_summary_json(const StudyConfig& cfg, const StudyResult& result);

// --- run manifest ---
std::uint64_t fnv1a_file(const std::string& path);

// Writes <out_dir>/manifest.json recording the tool version, command, input
// config hash, seed, timestamps, and output inventory.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& config_paths, std::uint64_t seed,
                    const std::vector<std::string>& outputs);

void ensure_directory(const std::string& path);

}  // namespace cathtrack
