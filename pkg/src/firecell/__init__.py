"""firecell: fuse satellite fire detections and night-light imagery with
mobile-phone activity records; classify antenna sites on an urban-rural
axis and measure event-aligned behavioral change around fires."""

__version__ = "0.1.0"
