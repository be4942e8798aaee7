#include "cathtrack/marker_design.hpp"

#include <cmath>
#include <sstream>

namespace cathtrack {

void CatheterDesign::validate() const {
    require(length > 0.0, ErrorCode::config, "design: length must be positive");
    require(radius > 0.0, ErrorCode::config, "design: radius must be positive");
    require(base_band_offset > 0.0, ErrorCode::config, "design: base band offset must be positive");
    require(marker_arclengths.size() == marker_angles.size(), ErrorCode::config,
            "design: arc-length and angle lists must have equal length");
    const int n = marker_count();
    for (int i = 0; i < n; ++i) {
        const double s = marker_arclengths(i);
        if (s <= 0.0 || s >= length) {
            std::ostringstream msg;
            msg << "design: marker " << (i + 1) << " at s=" << s
                << " mm falls outside (0, " << length << ")";
            fail(ErrorCode::config, msg.str());
        }
        if (i > 0 && s <= marker_arclengths(i - 1))
            fail(ErrorCode::config, "design: marker arc-lengths must be strictly increasing");
    }
}

CatheterDesign build_helical_design(double length, double radius, int n, const HelixSpec& helix) {
    require(n >= 1, ErrorCode::config, "helical design needs at least one marker");
    require(helix.angular_spacing != 0.0, ErrorCode::config,
            "helix angular spacing must be nonzero");

    CatheterDesign design;
    design.length = length;
    design.radius = radius;
    design.marker_arclengths.resize(n);
    design.marker_angles.resize(n);

    const double gap = helix.pitch * helix.angular_spacing;
    const double span = gap * (n - 1);
    const double s1 = 0.5 * (length - span);  // equal margins at both ends
    for (int i = 0; i < n; ++i) {
        design.marker_arclengths(i) = s1 + gap * i;
        design.marker_angles(i) = helix.start_angle + helix.angular_spacing * i;
    }
    design.validate();
    return design;
}

double marker_spacing(double radius, const HelixSpec& helix) {
    require(radius >= 0.0, ErrorCode::invalid_argument, "radius must be nonnegative");
    const double chord = 2.0 * radius * std::sin(0.5 * helix.angular_spacing);
    const double axial = helix.pitch * helix.angular_spacing;
    return std::sqrt(chord * chord + axial * axial);
}

double spacing_factor(double spacing, double uncertainty) {
    require(uncertainty != 0.0, ErrorCode::invalid_argument,
            "spacing factor undefined for zero uncertainty");
    return spacing / uncertainty;
}

}  // namespace cathtrack
