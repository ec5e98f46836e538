#include "qw/io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "qw/corners.hpp"
#include "qw/errors.hpp"

namespace qw::io {

namespace {

[[noreturn]] void fail(const std::string& what)
{
    throw Error(ErrorKind::InputError, what);
}

const json& field(const json& j, const char* key, const std::string& where)
{
    const auto it = j.find(key);
    if (it == j.end())
        fail(where + ": missing field '" + key + "'");
    return *it;
}

void allow_only(const json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!j.is_object())
        fail(where + ": expected an object");
    for (const auto& [name, value] : j.items()) {
        bool known = false;
        for (const char* k : keys)
            known = known || name == k;
        if (!known)
            fail(where + ": unknown field '" + name + "'");
    }
}

double number(const json& j, const std::string& where)
{
    if (!j.is_number())
        fail(where + ": expected a number");
    return j.get<double>();
}

std::size_t count(const json& j, const std::string& where)
{
    if (!j.is_number_unsigned() || j.get<std::size_t>() == 0)
        fail(where + ": expected a positive integer");
    return j.get<std::size_t>();
}

std::vector<double> reals(const json& j, const std::string& where)
{
    if (!j.is_array())
        fail(where + ": expected an array");
    std::vector<double> out;
    for (const auto& x : j)
        out.push_back(number(x, where));
    return out;
}

json component_json(const Component& c)
{
    return {{"vector", to_json(c.vector)}, {"profile", to_json(c.profile)}};
}

json weight_body(const BoundaryWeight& mu)
{
    json terms = json::array();
    for (const auto& t : mu.terms()) {
        json term = to_json(t.atom);
        term["lambda"] = t.lambda;
        terms.push_back(std::move(term));
    }
    return {{"dim_k", mu.dim()}, {"terms", std::move(terms)}};
}

WeightTerm term_from_json(const json& j)
{
    allow_only(j, {"lambda", "vector", "profile", "components"}, "weight term");
    json atom = j;
    atom.erase("lambda");
    return {number(field(j, "lambda", "weight term"), "lambda"), atom_from_json(atom)};
}

CornerData corner_from_json(const json& j, const QWeightMap& first, const QWeightMap& second)
{
    if (j.contains("U")) {
        allow_only(j, {"U", "z", "h_atoms"}, "corner");
        const CornerCandidate c = corner_candidate(first, second, matrix_from_json(j["U"]),
                                                   number(field(j, "z", "corner"), "z"));
        if (j.contains("h_atoms")) {
            // Supplied residuals must agree with the ones forced by (U, z).
            const json& h = j["h_atoms"];
            if (!h.is_array() || h.size() != c.residuals.size())
                fail("corner: h_atoms must list one atom per term");
            for (std::size_t i = 0; i < h.size(); ++i) {
                std::vector<Component> diff = c.residuals[i].components();
                const WeightAtom given = atom_from_json(h[i]);
                for (const auto& comp : given.components())
                    diff.push_back({scaled(comp.profile, -1.0), comp.vector});
                const WeightAtom d = WeightAtom::composite(std::move(diff));
                const GrowthPoly gap = pair_growth(d, d, Matrix::identity(d.dim()), Kernel::ExpNeg);
                if (!gap.bounded() || std::abs(gap.constant()) > 1e-9)
                    fail("corner: h_atoms differ from the residuals implied by U and z");
            }
        }
        return c.corner;
    }
    allow_only(j, {"Q", "tau", "lambda"}, "corner");
    const json& tau = field(j, "tau", "corner");
    allow_only(tau, {"bra", "ket"}, "corner tau");
    CornerData out;
    out.q = matrix_from_json(field(j, "Q", "corner"));
    const json& bra = field(tau, "bra", "corner tau");
    const json& ket = field(tau, "ket", "corner tau");
    if (!bra.is_array() || !ket.is_array() || bra.size() != ket.size())
        fail("corner tau: bra and ket must be arrays of equal length");
    for (const auto& b : bra)
        out.bra.push_back(term_from_json(b));
    for (const auto& k : ket)
        out.ket.push_back(atom_from_json(k));
    out.scale = number(field(j, "lambda", "corner"), "lambda");
    return out;
}

}  // namespace

json to_json(cplx z)
{
    return json::array({z.real(), z.imag()});
}

json to_json(const Matrix& m)
{
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c)
            row.push_back(to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(std::span<const cplx> v)
{
    json out = json::array();
    for (const cplx z : v)
        out.push_back(to_json(z));
    return out;
}

json to_json(const Profile& g)
{
    if (const auto* p = std::get_if<PowerExp>(&g))
        return {{"kind", "power_exp"}, {"amplitude", to_json(p->amplitude)}, {"p", p->power}, {"s", p->decay}};
    if (const auto* c = std::get_if<Canonical>(&g))
        return {{"kind", "powers_canonical"}, {"amplitude", to_json(c->amplitude)}};
    const auto& s = std::get<GridSampled>(g);
    return {{"kind", "grid_sampled"}, {"knots", s.knots}, {"values", to_json(std::span<const cplx>(s.values))}};
}

json to_json(const WeightAtom& atom)
{
    if (atom.single())
        return component_json(atom.components().front());
    json comps = json::array();
    for (const auto& c : atom.components())
        comps.push_back(component_json(c));
    return {{"components", std::move(comps)}};
}

json to_json(const BoundaryWeight& mu)
{
    return weight_body(mu);
}

json to_json(const CornerData& corner)
{
    json bra = json::array();
    for (const auto& t : corner.bra) {
        json term = to_json(t.atom);
        term["lambda"] = t.lambda;
        bra.push_back(std::move(term));
    }
    json ket = json::array();
    for (const auto& a : corner.ket)
        ket.push_back(to_json(a));
    return {{"Q", to_json(corner.q)}, {"tau", {{"bra", std::move(bra)}, {"ket", std::move(ket)}}},
            {"lambda", corner.scale}};
}

json to_json(const QWeightMap& qw)
{
    if (const auto* r = qw.rank_one()) {
        json out = weight_body(r->mu);
        out["kind"] = "rank_one";
        out["T"] = to_json(r->t);
        return out;
    }
    if (const auto* r = qw.rank_two())
        return {{"kind", "rank_two"}, {"e1", to_json(r->e1)}, {"e2", to_json(r->e2)},
                {"mu1", to_json(r->mu1)}, {"mu2", to_json(r->mu2)}};
    const auto& a = *qw.assembled_data();
    json out = {{"kind", "assembled"}, {"blocks", json::array({to_json(a.blocks[0]), to_json(a.blocks[1])})}};
    out["corner"] = a.corner ? to_json(*a.corner) : json(nullptr);
    return out;
}

json to_json(const std::vector<CurvePoint>& curve)
{
    json out = json::array();
    for (const auto& p : curve)
        out.push_back({{"t", p.t}, {"value", p.value}});
    return out;
}

cplx complex_from_json(const json& j)
{
    if (j.is_number())
        return j.get<double>();
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail("complex numbers are [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

CVector vector_from_json(const json& j)
{
    if (!j.is_array() || j.empty())
        fail("vectors are non-empty arrays of [re, im] pairs");
    CVector v;
    for (const auto& x : j)
        v.push_back(complex_from_json(x));
    return v;
}

Matrix matrix_from_json(const json& j)
{
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
        fail("matrices are non-empty arrays of rows");
    const std::size_t cols = j[0].size();
    Matrix m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            fail("matrix rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = complex_from_json(j[r][c]);
    }
    return m;
}

Profile profile_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        fail("profile: expected an object with a 'kind'");
    const std::string kind = j["kind"];
    if (kind == "power_exp") {
        allow_only(j, {"kind", "amplitude", "p", "s"}, "power_exp profile");
        PowerExp p;
        if (j.contains("amplitude"))
            p.amplitude = complex_from_json(j["amplitude"]);
        p.power = number(field(j, "p", "power_exp profile"), "p");
        p.decay = number(field(j, "s", "power_exp profile"), "s");
        if (!(p.power > -1.0) || !(p.decay > 0.0))
            fail("power_exp profile: need p > -1 and s > 0");
        return p;
    }
    if (kind == "powers_canonical") {
        allow_only(j, {"kind", "amplitude"}, "powers_canonical profile");
        Canonical c;
        if (j.contains("amplitude"))
            c.amplitude = complex_from_json(j["amplitude"]);
        return c;
    }
    if (kind == "grid_sampled") {
        allow_only(j, {"kind", "knots", "values"}, "grid_sampled profile");
        GridSampled g;
        g.knots = reals(field(j, "knots", "grid_sampled profile"), "knots");
        g.values = vector_from_json(field(j, "values", "grid_sampled profile"));
        if (g.knots.size() != g.values.size() || g.knots.size() < 2)
            fail("grid_sampled profile: knots and values need equal length >= 2");
        for (std::size_t i = 1; i < g.knots.size(); ++i)
            if (!(g.knots[i] > g.knots[i - 1]) || !(g.knots[0] >= 0.0))
                fail("grid_sampled profile: knots must be non-negative and increasing");
        return g;
    }
    fail("profile: unknown kind '" + kind + "'");
}

WeightAtom atom_from_json(const json& j)
{
    if (j.contains("components")) {
        allow_only(j, {"components"}, "atom");
        const json& comps = j["components"];
        if (!comps.is_array() || comps.empty())
            fail("atom: components must be a non-empty array");
        std::vector<Component> out;
        for (const auto& c : comps) {
            allow_only(c, {"vector", "profile"}, "atom component");
            out.push_back({profile_from_json(field(c, "profile", "atom component")),
                           vector_from_json(field(c, "vector", "atom component"))});
        }
        for (const auto& c : out)
            if (c.vector.size() != out.front().vector.size())
                fail("atom: component vectors differ in dimension");
        return WeightAtom::composite(std::move(out));
    }
    allow_only(j, {"vector", "profile"}, "atom");
    const CVector v = vector_from_json(field(j, "vector", "atom"));
    if (norm2(v) == 0.0)
        fail("atom: zero vector");
    return WeightAtom(profile_from_json(field(j, "profile", "atom")), v);
}

BoundaryWeight weight_from_json(const json& j)
{
    allow_only(j, {"dim_k", "terms"}, "weight");
    const std::size_t k = count(field(j, "dim_k", "weight"), "dim_k");
    const json& terms = field(j, "terms", "weight");
    if (!terms.is_array())
        fail("weight: terms must be an array");
    BoundaryWeight mu(k);
    for (const auto& t : terms) {
        WeightTerm term = term_from_json(t);
        if (term.atom.dim() != k)
            fail("weight: atom dimension differs from dim_k");
        if (!(term.lambda >= 0.0))
            fail("weight: lambda must be non-negative");
        mu.add(term.lambda, std::move(term.atom));
    }
    return mu;
}

QWeightMap qweight_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        fail("map: expected an object with a 'kind'");
    const std::string kind = j["kind"];
    const auto square = [](const Matrix& m, std::size_t k, const char* name) {
        if (m.rows() != k || m.cols() != k)
            fail(std::string("map: ") + name + " must be " + std::to_string(k) + " x " + std::to_string(k));
        return m;
    };
    if (kind == "rank_one") {
        allow_only(j, {"schema_version", "kind", "T", "dim_k", "terms"}, "rank_one map");
        const BoundaryWeight mu = weight_from_json({{"dim_k", field(j, "dim_k", "rank_one map")},
                                                    {"terms", field(j, "terms", "rank_one map")}});
        return RankOne{square(matrix_from_json(field(j, "T", "rank_one map")), mu.dim(), "T"), mu};
    }
    if (kind == "rank_two") {
        allow_only(j, {"schema_version", "kind", "e1", "e2", "mu1", "mu2"}, "rank_two map");
        const BoundaryWeight mu1 = weight_from_json(field(j, "mu1", "rank_two map"));
        const BoundaryWeight mu2 = weight_from_json(field(j, "mu2", "rank_two map"));
        if (mu1.dim() != mu2.dim())
            fail("rank_two map: mu1 and mu2 differ in dim_k");
        return RankTwo{square(matrix_from_json(field(j, "e1", "rank_two map")), mu1.dim(), "e1"),
                       square(matrix_from_json(field(j, "e2", "rank_two map")), mu1.dim(), "e2"), mu1, mu2};
    }
    if (kind == "assembled") {
        allow_only(j, {"schema_version", "kind", "blocks", "corner"}, "assembled map");
        const json& blocks = field(j, "blocks", "assembled map");
        if (!blocks.is_array() || blocks.size() != 2)
            fail("assembled map: blocks must hold two maps");
        const QWeightMap first = qweight_from_json(blocks[0]);
        const QWeightMap second = qweight_from_json(blocks[1]);
        std::optional<CornerData> corner;
        if (j.contains("corner") && !j["corner"].is_null())
            corner = corner_from_json(j["corner"], first, second);
        return QWeightMap::assembled(first, second, std::move(corner));
    }
    fail("map: unknown kind '" + kind + "'");
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("schema_version"))
        fail(path.string() + ": missing schema_version");
    if (j["schema_version"] != kSchemaVersion)
        fail(path.string() + ": unsupported schema_version");
    return j;
}

QWeightMap read_qweight(const std::filesystem::path& path)
{
    return qweight_from_json(read_json(path));
}

void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::InputError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve,
                     const std::string& value_name)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::InputError, "cannot write " + path.string());
    out.precision(17);
    out << "t," << value_name << '\n';
    for (const auto& p : curve)
        out << p.t << ',' << p.value << '\n';
}

}  // namespace qw::io
