"""
API views for simulation runs
"""
from pathlib import Path

from rest_framework import generics, permissions, status
from rest_framework.response import Response
from rest_framework.views import APIView

from ntfsim.exceptions import SchemaError

from .config import load_run_config
from .models import SimulationRun
from .serializers import RunSubmitSerializer, SimulationRunSerializer
from .series import read_series
from .services import create_run
from .tasks import run_simulation_task


class RunListView(generics.ListAPIView):
    """List runs, filtered by ?kind= and ?status=; POST queues a new run."""
    serializer_class = SimulationRunSerializer
    permission_classes = [permissions.AllowAny]

    def get_queryset(self):
        queryset = SimulationRun.objects.prefetch_related('checkpoints')
        kind = self.request.query_params.get('kind')
        if kind:
            queryset = queryset.filter(kind=kind)
        run_status = self.request.query_params.get('status')
        if run_status:
            queryset = queryset.filter(status=run_status)
        return queryset

    def post(self, request):
        serializer = RunSubmitSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)
        data = serializer.validated_data
        try:
            config = load_run_config(data['config'], preset=data.get('preset'))
        except SchemaError as e:
            return Response({'error': str(e), **e.diagnostics}, status=status.HTTP_400_BAD_REQUEST)

        run = create_run(data['kind'], config)
        run_simulation_task.delay(run.id, data.get('checkpoint'))
        return Response(SimulationRunSerializer(run).data, status=status.HTTP_202_ACCEPTED)


class RunDetailView(generics.RetrieveAPIView):
    serializer_class = SimulationRunSerializer
    permission_classes = [permissions.AllowAny]
    queryset = SimulationRun.objects.prefetch_related('checkpoints')


class RunSeriesView(APIView):
    """Records of a finished run's series file."""
    permission_classes = [permissions.AllowAny]

    def get(self, request, pk):
        try:
            run = SimulationRun.objects.get(pk=pk)
        except SimulationRun.DoesNotExist:
            return Response({'error': 'Run not found'}, status=status.HTTP_404_NOT_FOUND)
        if not run.series_path or not Path(run.series_path).exists():
            return Response({'error': 'Run has no series yet', 'status': run.status},
                            status=status.HTTP_404_NOT_FOUND)
        try:
            records = read_series(run.series_path)
        except SchemaError as e:
            return Response({'error': str(e)}, status=status.HTTP_500_INTERNAL_SERVER_ERROR)
        return Response({
            'run_id': run.id,
            'kind': run.kind,
            'count': len(records),
            'records': [r.to_dict() for r in records],
        })
