#include "ionfountain/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ionfountain::fields {

namespace {

inline double sech2(double x) {
    if (std::abs(x) > 300.0) return 0.0;
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

} // namespace

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 4 || y_.size() != n)
        throw ConfigError("tabulated model needs at least 4 (z, phi) samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw ConfigError("tabulated samples must be strictly increasing in z");

    // Natural cubic: tridiagonal solve for the knot second derivatives.
    m_.assign(n, 0.0);
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), sub(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        sub[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * (x_[i] - x_[i - 1]); // upper entry equals h_{i-1}
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        const double upper = x_[i + 1] - x_[i];
        m_[i] = (rhs[i] - upper * m_[i + 1]) / diag[i];
        if (i == 1) break;
    }
}

std::size_t CubicSpline::interval(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
}

double CubicSpline::value(double x) const {
    if (x < x_.front() || x > x_.back()) return 0.0;
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
    return y_[i] + t * (b + t * (m_[i] / 2.0 + t * (m_[i + 1] - m_[i]) / (6.0 * h)));
}

double CubicSpline::derivative(double x) const {
    if (x < x_.front() || x > x_.back()) return 0.0;
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
    return b + t * (m_[i] + t * (m_[i + 1] - m_[i]) / (2.0 * h));
}

double CubicSpline::second_derivative(double x) const {
    if (x < x_.front() || x > x_.back()) return 0.0;
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    return m_[i] + t * (m_[i + 1] - m_[i]) / h;
}

void ElectrodeModel::validate() const {
    if (std::abs(amplitude) > 1.0 + 1e-12)
        throw ConfigError("electrode amplitude must satisfy |A| <= 1");
    switch (kind) {
    case ElectrodeKind::GaussianSegment:
    case ElectrodeKind::AperturePlate:
    case ElectrodeKind::ReflectorRamp:
        if (!(width > 0.0)) throw ConfigError("electrode width must be > 0");
        break;
    case ElectrodeKind::FlatTube:
        if (!(width > 0.0)) throw ConfigError("flat-tube length must be > 0");
        if (!(edge_width > 0.0)) throw ConfigError("flat-tube edge width must be > 0");
        break;
    case ElectrodeKind::Tabulated:
        if (table.size() < 4)
            throw ConfigError("tabulated model needs at least 4 samples");
        break;
    }
    if (kind == ElectrodeKind::AperturePlate && screen_width < 0.0)
        throw ConfigError("aperture screen width must be >= 0");
    if (facing != +1 && facing != -1)
        throw ConfigError("electrode facing must be +1 or -1");
}

ElectrodeModel make_gaussian_segment(double center_z, double amplitude, double width) {
    ElectrodeModel m;
    m.kind = ElectrodeKind::GaussianSegment;
    m.center_z = center_z;
    m.amplitude = amplitude;
    m.width = width;
    m.validate();
    return m;
}

ElectrodeModel make_aperture_plate(double center_z, double amplitude, double width,
                                   int facing, double screen_z, double screen_width) {
    ElectrodeModel m;
    m.kind = ElectrodeKind::AperturePlate;
    m.center_z = center_z;
    m.amplitude = amplitude;
    m.width = width;
    m.facing = facing;
    m.screen_z = screen_z;
    m.screen_width = screen_width;
    m.validate();
    return m;
}

ElectrodeModel make_flat_tube(double center_z, double amplitude, double length,
                              double edge_width) {
    ElectrodeModel m;
    m.kind = ElectrodeKind::FlatTube;
    m.center_z = center_z;
    m.amplitude = amplitude;
    m.width = length;
    m.edge_width = edge_width;
    m.validate();
    return m;
}

ElectrodeModel make_reflector_ramp(double center_z, double amplitude, double width,
                                   int facing) {
    ElectrodeModel m;
    m.kind = ElectrodeKind::ReflectorRamp;
    m.center_z = center_z;
    m.amplitude = amplitude;
    m.width = width;
    m.facing = facing;
    m.validate();
    return m;
}

ElectrodeModel make_tabulated(const std::vector<double>& z,
                              const std::vector<double>& phi) {
    ElectrodeModel m;
    m.kind = ElectrodeKind::Tabulated;
    m.table = CubicSpline(z, phi);
    if (!z.empty()) m.center_z = 0.5 * (z.front() + z.back());
    for (double p : phi)
        if (std::abs(p) > 1.0 + 1e-9)
            throw ConfigError("tabulated unit potential exceeds |phi| = 1");
    return m;
}

ElectrodeModel load_tabulated_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tabulated potential file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("z,phi", 0) != 0)
        throw ConfigError("tabulated CSV must start with header 'z,phi': " + path);
    std::vector<double> z, phi;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw ConfigError("malformed row in " + path + ": " + line);
        z.push_back(std::stod(a));
        phi.push_back(std::stod(b));
    }
    return make_tabulated(z, phi);
}

double unit_potential(const ElectrodeModel& m, double z) {
    switch (m.kind) {
    case ElectrodeKind::GaussianSegment: {
        const double u = (z - m.center_z) / m.width;
        return m.amplitude * std::exp(-0.5 * u * u);
    }
    case ElectrodeKind::AperturePlate: {
        const double u = m.facing * (z - m.center_z) / m.width;
        double phi = 0.5 * (1.0 + std::tanh(u));
        if (m.screen_width > 0.0) {
            const double v = m.facing * (z - m.screen_z) / m.screen_width;
            phi *= 0.5 * (1.0 - std::tanh(v));
        }
        return m.amplitude * phi;
    }
    case ElectrodeKind::FlatTube: {
        const double l = m.center_z - 0.5 * m.width;
        const double r = m.center_z + 0.5 * m.width;
        return m.amplitude * 0.5 *
               (std::tanh((z - l) / m.edge_width) - std::tanh((z - r) / m.edge_width));
    }
    case ElectrodeKind::ReflectorRamp: {
        const double u = m.facing * (z - m.center_z) / m.width;
        return m.amplitude * 0.5 * (1.0 + std::tanh(u));
    }
    case ElectrodeKind::Tabulated:
        return m.table.value(z);
    }
    return 0.0;
}

double unit_potential_derivative(const ElectrodeModel& m, double z) {
    switch (m.kind) {
    case ElectrodeKind::GaussianSegment: {
        const double u = (z - m.center_z) / m.width;
        return -m.amplitude * u / m.width * std::exp(-0.5 * u * u);
    }
    case ElectrodeKind::AperturePlate: {
        const double ku = m.facing / m.width;
        const double u = ku * (z - m.center_z);
        const double b = 0.5 * (1.0 + std::tanh(u));
        const double db = 0.5 * sech2(u) * ku;
        if (m.screen_width <= 0.0) return m.amplitude * db;
        const double kv = m.facing / m.screen_width;
        const double v = kv * (z - m.screen_z);
        const double s = 0.5 * (1.0 - std::tanh(v));
        const double ds = -0.5 * sech2(v) * kv;
        return m.amplitude * (db * s + b * ds);
    }
    case ElectrodeKind::FlatTube: {
        const double l = m.center_z - 0.5 * m.width;
        const double r = m.center_z + 0.5 * m.width;
        const double k = 1.0 / m.edge_width;
        return m.amplitude * 0.5 * k * (sech2((z - l) * k) - sech2((z - r) * k));
    }
    case ElectrodeKind::ReflectorRamp: {
        const double k = m.facing / m.width;
        return m.amplitude * 0.5 * sech2(k * (z - m.center_z)) * k;
    }
    case ElectrodeKind::Tabulated:
        return m.table.derivative(z);
    }
    return 0.0;
}

double unit_potential_second_derivative(const ElectrodeModel& m, double z) {
    switch (m.kind) {
    case ElectrodeKind::GaussianSegment: {
        const double u = (z - m.center_z) / m.width;
        return m.amplitude * (u * u - 1.0) / (m.width * m.width) * std::exp(-0.5 * u * u);
    }
    case ElectrodeKind::AperturePlate: {
        const double ku = m.facing / m.width;
        const double u = ku * (z - m.center_z);
        const double s2u = sech2(u);
        const double b = 0.5 * (1.0 + std::tanh(u));
        const double db = 0.5 * s2u * ku;
        const double d2b = -s2u * std::tanh(u) * ku * ku;
        if (m.screen_width <= 0.0) return m.amplitude * d2b;
        const double kv = m.facing / m.screen_width;
        const double v = kv * (z - m.screen_z);
        const double s2v = sech2(v);
        const double s = 0.5 * (1.0 - std::tanh(v));
        const double ds = -0.5 * s2v * kv;
        const double d2s = s2v * std::tanh(v) * kv * kv;
        return m.amplitude * (d2b * s + 2.0 * db * ds + b * d2s);
    }
    case ElectrodeKind::FlatTube: {
        const double l = m.center_z - 0.5 * m.width;
        const double r = m.center_z + 0.5 * m.width;
        const double k = 1.0 / m.edge_width;
        const double ul = (z - l) * k;
        const double ur = (z - r) * k;
        return -m.amplitude * k * k *
               (sech2(ul) * std::tanh(ul) - sech2(ur) * std::tanh(ur));
    }
    case ElectrodeKind::ReflectorRamp: {
        const double k = m.facing / m.width;
        const double u = k * (z - m.center_z);
        return -m.amplitude * sech2(u) * std::tanh(u) * k * k;
    }
    case ElectrodeKind::Tabulated:
        return m.table.second_derivative(z);
    }
    return 0.0;
}

int ElectrodeStack::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < electrodes.size(); ++i)
        if (electrodes[i].name == name) return static_cast<int>(i);
    return -1;
}

const ElectrodeModel& ElectrodeStack::model(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw ConfigError("unknown electrode: " + name);
    return electrodes[static_cast<std::size_t>(i)].model;
}

ElectrodeModel& ElectrodeStack::model(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw ConfigError("unknown electrode: " + name);
    return electrodes[static_cast<std::size_t>(i)].model;
}

void ElectrodeStack::validate() const {
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        electrodes[i].model.validate();
        for (std::size_t j = i + 1; j < electrodes.size(); ++j)
            if (electrodes[i].name == electrodes[j].name)
                throw ConfigError("duplicate electrode name: " + electrodes[i].name);
    }
    const int e1 = index_of("E1");
    const int e2 = index_of("E2");
    if (e1 >= 0 && e2 >= 0) {
        const double z1 = electrodes[static_cast<std::size_t>(e1)].model.center_z;
        const double z2 = electrodes[static_cast<std::size_t>(e2)].model.center_z;
        const double lo = std::min(z1, z2), hi = std::max(z1, z2);
        if (!(trap_center_z > lo && trap_center_z < hi))
            throw ConfigError("trap center must lie strictly between the endcaps");
    }
    if (!(max_z > trap_center_z))
        throw ConfigError("max_z must lie beyond the trap center");
}

double total_potential(const ElectrodeStack& stack, const VoltageMap& voltages, double z) {
    for (const auto& [name, u] : voltages) {
        (void)u;
        if (stack.index_of(name) < 0)
            throw ConfigError("voltage refers to unknown electrode: " + name);
    }
    double phi = 0.0;
    for (const auto& e : stack.electrodes) {
        auto it = voltages.find(e.name);
        if (it == voltages.end() || it->second == 0.0) continue;
        phi += it->second * unit_potential(e.model, z);
    }
    return phi;
}

double axial_field(const ElectrodeStack& stack, const VoltageMap& voltages, double z) {
    for (const auto& [name, u] : voltages) {
        (void)u;
        if (stack.index_of(name) < 0)
            throw ConfigError("voltage refers to unknown electrode: " + name);
    }
    double dphi = 0.0;
    for (const auto& e : stack.electrodes) {
        auto it = voltages.find(e.name);
        if (it == voltages.end() || it->second == 0.0) continue;
        dphi += it->second * unit_potential_derivative(e.model, z);
    }
    return -dphi;
}

PotentialEvaluator::PotentialEvaluator(const ElectrodeStack& stack) : stack_(&stack) {}

double PotentialEvaluator::potential(const std::vector<double>& voltages, double z) const {
    double phi = 0.0;
    for (std::size_t i = 0; i < stack_->electrodes.size(); ++i) {
        const double u = voltages[i];
        if (u == 0.0) continue;
        phi += u * unit_potential(stack_->electrodes[i].model, z);
    }
    return phi;
}

double PotentialEvaluator::field(const std::vector<double>& voltages, double z) const {
    double dphi = 0.0;
    for (std::size_t i = 0; i < stack_->electrodes.size(); ++i) {
        const double u = voltages[i];
        if (u == 0.0) continue;
        dphi += u * unit_potential_derivative(stack_->electrodes[i].model, z);
    }
    return -dphi;
}

double PotentialEvaluator::curvature(const std::vector<double>& voltages, double z) const {
    double d2 = 0.0;
    for (std::size_t i = 0; i < stack_->electrodes.size(); ++i) {
        const double u = voltages[i];
        if (u == 0.0) continue;
        d2 += u * unit_potential_second_derivative(stack_->electrodes[i].model, z);
    }
    return d2;
}

std::vector<double> PotentialEvaluator::voltages_from_map(const VoltageMap& v) const {
    std::vector<double> out(stack_->electrodes.size(), 0.0);
    for (const auto& [name, u] : v) {
        const int i = stack_->index_of(name);
        if (i < 0) throw ConfigError("voltage refers to unknown electrode: " + name);
        out[static_cast<std::size_t>(i)] = u;
    }
    return out;
}

double calibrate_segment_curvature(double ion_mass, double ion_charge,
                                   double target_omega_z, double u_seg) {
    if (u_seg == 0.0) throw ConfigError("segment calibration is degenerate at U_seg = 0");
    if (!(target_omega_z > 0.0)) throw ConfigError("target frequency must be > 0");
    return ion_mass * target_omega_z * target_omega_z /
           (std::abs(ion_charge) * std::abs(u_seg));
}

ElectrodeModel make_calibrated_segment(double center_z, double amplitude, double kappa2) {
    return make_gaussian_segment(center_z, amplitude, std::sqrt(amplitude / kappa2));
}

ElectrodeStack default_stack() {
    const double mass = 39.9626 * ATOMIC_MASS_UNIT - ELECTRON_MASS; // 40Ca+
    const double omega_z = TWO_PI * 147e3;
    const double kappa2 = calibrate_segment_curvature(mass, ELEMENTARY_CHARGE, omega_z, -0.6);

    ElectrodeStack s;
    for (int n = 1; n <= 11; ++n) {
        const double center = (n - 6) * 0.25e-3;
        s.electrodes.push_back({"seg" + std::to_string(n),
                                make_calibrated_segment(center, 0.2, kappa2)});
    }
    // Endcap plateaus are screened where the grounded steering assembly
    // takes over; the flight tube between F and the reflector sits at
    // U_E1 * 0.85 as a result.
    s.electrodes.push_back({"E1", make_aperture_plate(1.45e-3, 0.90, 0.36e-3, +1,
                                                      53.4e-3, 0.85e-3)});
    s.electrodes.push_back({"E2", make_aperture_plate(-1.45e-3, 0.90, 0.36e-3, -1,
                                                      -53.4e-3, 0.85e-3)});
    s.electrodes.push_back({"F", make_flat_tube(8e-3, 0.09, 5e-3, 1e-3)});
    s.electrodes.push_back({"R", make_reflector_ramp(55e-3, 1.0, 0.85e-3)});
    s.trap_center_z = 0.0;
    s.max_z = 80e-3;
    s.min_z = -2e-3;
    s.validate();
    return s;
}

VoltageMap baseline_voltages() {
    VoltageMap v;
    for (int n = 1; n <= 11; ++n) v["seg" + std::to_string(n)] = 0.0;
    v["seg6"] = -0.6;
    v["E1"] = -200.0;
    v["E2"] = 0.0;
    v["F"] = -200.0;
    v["R"] = 7.5;
    return v;
}

} // namespace ionfountain::fields
