"""
Gunicorn configuration file for serving the stability API.
This file configures Gunicorn to run FastAPI with Uvicorn workers.
"""
import os

# Server socket
port = int(os.getenv('PORT', '8000'))
bind = f"{os.getenv('API_HOST', '0.0.0.0')}:{port}"
backlog = 512

# Worker processes
# Requests are CPU-bound numpy work; one worker per core is enough
worker_class = "uvicorn.workers.UvicornWorker"
workers = int(os.getenv("GUNICORN_WORKERS", os.cpu_count() or 1))
keepalive = 5

# Logging
accesslog = os.getenv("GUNICORN_ACCESS_LOG", "-")  # "-" means stdout
errorlog = os.getenv("GUNICORN_ERROR_LOG", "-")  # "-" means stderr
loglevel = os.getenv("GUNICORN_LOG_LEVEL", "info").lower()

# Process naming
proc_name = "memstab-api"

# Server mechanics
daemon = False
pidfile = os.getenv("GUNICORN_PIDFILE", None)
preload_app = True

# Spectrum sweeps on dense grids can take several seconds
graceful_timeout = 30
timeout = 120
