#include <fmt/format.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <charconv>
#include <sstream>

#include "evac/dataset.hpp"
#include "evac/errors.hpp"

namespace evac {

namespace pt = boost::property_tree;

// <scenario version="1" seed="...">
//   <geometry length="..." width="...">
//     <wall x1 y1 x2 y2/>  <obstacle points/>  <bottleneck points/>
//     <room points door/>  <exit points/>
//   </geometry>
//   <origin room agents/>  <destination exit points/>
//   <spawn meanSpeed sigma/>
// </scenario>
// Points are "x,y x,y ..."; numbers in shortest round-trip form.

namespace {

constexpr int kXmlVersion = 1;

std::string num(double v) { return fmt::format("{}", v); }

double parse_num(std::string_view s) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw FormatError(fmt::format("scenario xml: bad number '{}'", s));
    return v;
}

std::string points_attr(const Polygon& p) {
    std::string out;
    for (Vec2 v : p) {
        if (!out.empty()) out += ' ';
        out += num(v.x) + ',' + num(v.y);
    }
    return out;
}

Polygon parse_points(const std::string& s) {
    Polygon p;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        const auto comma = tok.find(',');
        if (comma == std::string::npos) throw FormatError(fmt::format("scenario xml: bad point '{}'", tok));
        p.push_back({parse_num(std::string_view(tok).substr(0, comma)), parse_num(std::string_view(tok).substr(comma + 1))});
    }
    return p;
}

std::string segment_attr(const Segment& s) { return fmt::format("{} {} {} {}", num(s.a.x), num(s.a.y), num(s.b.x), num(s.b.y)); }

Segment parse_segment(const std::string& s) {
    std::istringstream in(s);
    std::string t[4];
    if (!(in >> t[0] >> t[1] >> t[2] >> t[3])) throw FormatError(fmt::format("scenario xml: bad segment '{}'", s));
    return {{parse_num(t[0]), parse_num(t[1])}, {parse_num(t[2]), parse_num(t[3])}};
}

pt::ptree& add(pt::ptree& parent, const std::string& name) { return parent.add_child(name, pt::ptree()); }

void attr(pt::ptree& node, const std::string& key, const std::string& value) { node.put("<xmlattr>." + key, value); }

std::string get_attr(const pt::ptree& node, const std::string& key) {
    const auto v = node.get_optional<std::string>("<xmlattr>." + key);
    if (!v) throw FormatError(fmt::format("scenario xml: missing attribute '{}'", key));
    return *v;
}

int get_int(const pt::ptree& node, const std::string& key) {
    const std::string s = get_attr(node, key);
    int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw FormatError(fmt::format("scenario xml: bad integer '{}'", s));
    return v;
}

}  // namespace

std::string export_scenario_xml(const Scenario& s) {
    pt::ptree doc;
    pt::ptree& root = add(doc, "scenario");
    attr(root, "version", std::to_string(kXmlVersion));
    attr(root, "seed", std::to_string(s.seed));

    const Floorplan& fp = s.floorplan;
    pt::ptree& geo = add(root, "geometry");
    attr(geo, "length", num(fp.site_length));
    attr(geo, "width", num(fp.site_width));
    for (const Segment& w : fp.walls) {
        pt::ptree& n = add(geo, "wall");
        attr(n, "x1", num(w.a.x));
        attr(n, "y1", num(w.a.y));
        attr(n, "x2", num(w.b.x));
        attr(n, "y2", num(w.b.y));
    }
    for (const Polygon& p : fp.obstacles) attr(add(geo, "obstacle"), "points", points_attr(p));
    for (const Polygon& p : fp.bottleneck) attr(add(geo, "bottleneck"), "points", points_attr(p));
    for (const Room& r : fp.rooms) {
        pt::ptree& n = add(geo, "room");
        attr(n, "points", points_attr(r.polygon));
        attr(n, "door", segment_attr(r.door));
    }
    for (const Polygon& p : fp.exit_zones) attr(add(geo, "exit"), "points", points_attr(p));

    for (const Origin& o : s.origins) {
        pt::ptree& n = add(root, "origin");
        attr(n, "room", std::to_string(o.room));
        attr(n, "agents", std::to_string(o.agent_count));
    }
    for (int d : s.destinations) {
        pt::ptree& n = add(root, "destination");
        attr(n, "exit", std::to_string(d));
        if (d >= 0 && d < static_cast<int>(fp.exit_zones.size())) attr(n, "points", points_attr(fp.exit_zones[d]));
    }
    pt::ptree& spawn = add(root, "spawn");
    attr(spawn, "meanSpeed", num(s.mean_speed));
    attr(spawn, "sigma", num(s.speed_sigma));

    std::ostringstream os;
    pt::write_xml(os, doc, pt::xml_writer_make_settings<std::string>(' ', 2));
    return os.str();
}

Scenario parse_scenario_xml(const std::string& xml) {
    pt::ptree doc;
    try {
        std::istringstream in(xml);
        pt::read_xml(in, doc);
    } catch (const pt::ptree_error& e) {
        throw FormatError(fmt::format("scenario xml: {}", e.what()));
    }
    const auto root = doc.get_child_optional("scenario");
    if (!root) throw FormatError("scenario xml: missing <scenario>");
    if (get_int(*root, "version") != kXmlVersion) throw FormatError("scenario xml: unsupported version");

    Scenario s;
    const std::string seed = get_attr(*root, "seed");
    const auto [end, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), s.seed);
    if (ec != std::errc() || end != seed.data() + seed.size()) throw FormatError("scenario xml: bad seed");

    bool have_geometry = false, have_spawn = false;
    for (const auto& [name, node] : *root) {
        if (name == "geometry") {
            have_geometry = true;
            Floorplan& fp = s.floorplan;
            fp.site_length = parse_num(get_attr(node, "length"));
            fp.site_width = parse_num(get_attr(node, "width"));
            for (const auto& [child, n] : node) {
                if (child == "wall")
                    fp.walls.push_back({{parse_num(get_attr(n, "x1")), parse_num(get_attr(n, "y1"))},
                                        {parse_num(get_attr(n, "x2")), parse_num(get_attr(n, "y2"))}});
                else if (child == "obstacle") fp.obstacles.push_back(parse_points(get_attr(n, "points")));
                else if (child == "bottleneck") fp.bottleneck.push_back(parse_points(get_attr(n, "points")));
                else if (child == "room") fp.rooms.push_back({parse_points(get_attr(n, "points")), parse_segment(get_attr(n, "door"))});
                else if (child == "exit") fp.exit_zones.push_back(parse_points(get_attr(n, "points")));
                else if (child != "<xmlattr>" && child != "<xmlcomment>")
                    throw FormatError(fmt::format("scenario xml: unexpected <{}>", child));
            }
        } else if (name == "origin") {
            s.origins.push_back({get_int(node, "room"), get_int(node, "agents")});
        } else if (name == "destination") {
            s.destinations.push_back(get_int(node, "exit"));
        } else if (name == "spawn") {
            have_spawn = true;
            s.mean_speed = parse_num(get_attr(node, "meanSpeed"));
            s.speed_sigma = parse_num(get_attr(node, "sigma"));
        } else if (name != "<xmlattr>" && name != "<xmlcomment>") {
            throw FormatError(fmt::format("scenario xml: unexpected <{}>", name));
        }
    }
    if (!have_geometry || !have_spawn) throw FormatError("scenario xml: missing <geometry> or <spawn>");
    return s;
}

}  // namespace evac
