"""Tooling functions for small-scale geometry on latitude/longitude coordinates."""

import numpy as np

METERS_PER_DEG_LAT = 111_320.0


def meters_per_deg_lon(lat):
    return METERS_PER_DEG_LAT * np.cos(np.radians(lat))


def to_local_meters(lats, lons, lat0, lon0):
    """Project to a local east/north frame in meters (equirectangular at lat0)."""
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    north = (lats - lat0) * METERS_PER_DEG_LAT
    east = (lons - lon0) * meters_per_deg_lon(lat0)
    return east, north


def from_local_meters(east, north, lat0, lon0):
    lats = lat0 + np.asarray(north, dtype=float) / METERS_PER_DEG_LAT
    lons = lon0 + np.asarray(east, dtype=float) / meters_per_deg_lon(lat0)
    return lats, lons
